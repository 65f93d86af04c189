"""Radially symmetric field and potential profiles, spectral parameters, scenarios.

All profiles are immutable and evaluate on numpy arrays. The magnetic field
enters every later computation through the radial gauge function

    a(r) = (1/r) ∫_0^r s B(s) ds,

which is what :func:`gauge_a` returns.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Union

import numpy as np
from numpy.polynomial import Polynomial

from .quadrature import QuadratureError, adaptive_simpson

RC = "RC"
GROWING = "GrowingField"

# relative tolerance/absolute floor for the gauge integrals
GAUGE_RTOL = 1e-10
GAUGE_ATOL = 1e-14
_CHECKPOINTS = 256
# segments between checkpoints are short; adaptivity refines where needed
_SEGMENT_PANELS = 2


class ScenarioError(ValueError):
    """A scenario violates one or more hypotheses; ``errors`` lists each one."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _as_array(r):
    return np.asarray(r, dtype=float)


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


@dataclass(frozen=True)
class Disk:
    r0: float

    @property
    def area(self) -> float:
        return math.pi * self.r0**2


# ---------------------------------------------------------------------------
# magnetic field profiles


@dataclass(frozen=True)
class ConstantField:
    B0: float
    kind = "constant"

    def __call__(self, r):
        r = _as_array(r)
        return _scalar_or_array(np.full_like(r, self.B0), r)

    def flux_integral(self, r):
        """∫_0^r s B(s) ds."""
        r = _as_array(r)
        return _scalar_or_array(0.5 * self.B0 * r**2, r)

    def gauge(self, r):
        r = _as_array(r)
        return _scalar_or_array(0.5 * self.B0 * r, r)

    @property
    def bounded(self) -> bool:
        return True

    def is_zero(self) -> bool:
        return self.B0 == 0.0

    def breakpoints(self):
        return ()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "B0": self.B0}


@dataclass(frozen=True)
class PolynomialField:
    """B(r) = Σ_k coefficients[k] r^k."""

    coefficients: tuple
    kind = "polynomial"

    def __call__(self, r):
        r = _as_array(r)
        return _scalar_or_array(np.polynomial.polynomial.polyval(r, self.coefficients), r)

    def flux_integral(self, r):
        r = _as_array(r)
        # ∫ s^{k+1} ds = r^{k+2}/(k+2)
        c = [0.0, 0.0] + [ck / (k + 2) for k, ck in enumerate(self.coefficients)]
        return _scalar_or_array(np.polynomial.polynomial.polyval(r, c), r)

    def gauge(self, r):
        r = _as_array(r)
        c = [0.0] + [ck / (k + 2) for k, ck in enumerate(self.coefficients)]
        return _scalar_or_array(np.polynomial.polynomial.polyval(r, c), r)

    @property
    def bounded(self) -> bool:
        return True

    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coefficients)

    def breakpoints(self):
        return ()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class TabulatedField:
    """Piecewise-linear interpolation of (grid, values); grid must start at 0."""

    grid: tuple
    values: tuple
    kind = "tabulated"

    def __call__(self, r):
        r = _as_array(r)
        return _scalar_or_array(np.interp(r, self.grid, self.values), r)

    @cached_property
    def _cells(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        slope = np.diff(v) / np.diff(g)
        base = v[:-1] - slope * g[:-1]
        # exact ∫_{g_i}^{g_{i+1}} s (base + slope s) ds
        pieces = base * (g[1:] ** 2 - g[:-1] ** 2) / 2 + slope * (g[1:] ** 3 - g[:-1] ** 3) / 3
        cum = np.concatenate([[0.0], np.cumsum(pieces)])
        return g, base, slope, cum

    def flux_integral(self, r):
        r = _as_array(r)
        g, base, slope, cum = self._cells
        i = np.clip(np.searchsorted(g, r, side="right") - 1, 0, len(g) - 2)
        g0 = g[i]
        out = cum[i] + base[i] * (r**2 - g0**2) / 2 + slope[i] * (r**3 - g0**3) / 3
        return _scalar_or_array(out, r)

    def gauge(self, r):
        r = _as_array(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(r > 0, _as_array(self.flux_integral(r)) / np.where(r > 0, r, 1.0), 0.0)
        return _scalar_or_array(out, r)

    @property
    def bounded(self) -> bool:
        return True

    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.values)

    def breakpoints(self):
        return tuple(self.grid)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "grid": list(self.grid), "values": list(self.values)}


@dataclass(frozen=True)
class PowerLawBoundaryField:
    """B(r) = K + c / (r0 - r)^beta, growing toward the boundary of the disk.

    The gauge integral of the singular part is computed by adaptive Simpson.
    For beta < 1 it is carried out in the variable u = (r0 - s)^(1 - beta),
    in which the integrand is bounded up to and including r = r0.
    """

    K: float
    c: float
    beta: float
    r0: float
    kind = "power_law_boundary"

    def __call__(self, r):
        r = _as_array(r)
        with np.errstate(divide="ignore"):
            out = self.K + self.c / (self.r0 - r) ** self.beta
        return _scalar_or_array(out, r)

    # singular part G(r) = ∫_0^r s (r0 - s)^(-beta) ds
    def _g_segment(self, lo: float, hi: float) -> float:
        if hi <= lo:
            return 0.0
        r0, beta = self.r0, self.beta
        if beta < 1.0:
            p = 1.0 / (1.0 - beta)

            def fu(u):
                return (r0 - u**p) * p

            # s = r0 - u^p, ds = -p u^(p-1) du, s (r0-s)^(-beta) ds = (r0 - u^p) p du
            u_lo = (r0 - hi) ** (1.0 - beta)
            u_hi = (r0 - lo) ** (1.0 - beta)
            return adaptive_simpson(fu, u_lo, u_hi, GAUGE_RTOL, GAUGE_ATOL, min_panels=_SEGMENT_PANELS)
        if hi >= r0:
            raise QuadratureError(
                f"gauge integral diverges on [{lo!r}, {r0!r}]: beta={beta} >= 1 puts a non-integrable "
                "singularity at the boundary"
            )
        return adaptive_simpson(lambda s: s * (r0 - s) ** (-beta), lo, hi, GAUGE_RTOL, GAUGE_ATOL,
                               min_panels=_SEGMENT_PANELS)

    @cached_property
    def _checkpoints(self):
        xs = np.linspace(0.0, self.r0, _CHECKPOINTS + 1)
        cum = [0.0]
        for lo, hi in zip(xs[:-2], xs[1:-1]):
            cum.append(cum[-1] + self._g_segment(lo, hi))
        return xs[:-1], np.array(cum)

    def _singular_integral(self, r: float) -> float:
        xs, cum = self._checkpoints
        k = min(int(np.searchsorted(xs, r, side="right")) - 1, len(xs) - 1)
        return cum[k] + self._g_segment(xs[k], r)

    def flux_integral(self, r):
        ra = np.atleast_1d(_as_array(r))
        g = np.array([self._singular_integral(float(x)) for x in ra])
        out = 0.5 * self.K * ra**2 + self.c * g
        return float(out[0]) if np.ndim(r) == 0 else out.reshape(np.shape(r))

    def gauge(self, r):
        ra = np.atleast_1d(_as_array(r))
        flux = np.atleast_1d(self.flux_integral(ra))
        out = np.where(ra > 0, flux / np.where(ra > 0, ra, 1.0), 0.0)
        return float(out[0]) if np.ndim(r) == 0 else out.reshape(np.shape(r))

    @property
    def bounded(self) -> bool:
        return self.c == 0.0

    def is_zero(self) -> bool:
        return False

    def breakpoints(self):
        return ()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "K": self.K, "c": self.c, "beta": self.beta}


RadialField = Union[ConstantField, PolynomialField, TabulatedField, PowerLawBoundaryField]


# ---------------------------------------------------------------------------
# electric potential profiles


@dataclass(frozen=True)
class ZeroPotential:
    kind = "zero"

    def __call__(self, r):
        r = _as_array(r)
        return _scalar_or_array(np.zeros_like(r), r)

    def sup_norm(self, r0: float) -> float:
        return 0.0

    def minimum(self, r0: float) -> float:
        return 0.0

    def is_zero(self) -> bool:
        return True

    def breakpoints(self):
        return ()

    def to_dict(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class ConstantPotential:
    V0: float
    kind = "constant"

    def __call__(self, r):
        r = _as_array(r)
        return _scalar_or_array(np.full_like(r, self.V0), r)

    def sup_norm(self, r0: float) -> float:
        return abs(self.V0)

    def minimum(self, r0: float) -> float:
        return self.V0

    def is_zero(self) -> bool:
        return self.V0 == 0.0

    def breakpoints(self):
        return ()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "V0": self.V0}


@dataclass(frozen=True)
class PolynomialPotential:
    coefficients: tuple
    kind = "polynomial"

    def __call__(self, r):
        r = _as_array(r)
        return _scalar_or_array(np.polynomial.polynomial.polyval(r, self.coefficients), r)

    @lru_cache(maxsize=8)
    def _extremes(self, r0: float):
        p = Polynomial(self.coefficients)
        cand = [0.0, r0]
        for z in p.deriv().roots() if len(self.coefficients) > 1 else []:
            if abs(z.imag) < 1e-12 and 0.0 < z.real < r0:
                cand.append(float(z.real))
        vals = p(np.array(cand))
        return float(vals.min()), float(np.abs(vals).max())

    def sup_norm(self, r0: float) -> float:
        return self._extremes(r0)[1]

    def minimum(self, r0: float) -> float:
        return self._extremes(r0)[0]

    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coefficients)

    def breakpoints(self):
        return ()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "coefficients": list(self.coefficients)}


@dataclass(frozen=True)
class TabulatedPotential:
    grid: tuple
    values: tuple
    kind = "tabulated"

    def __call__(self, r):
        r = _as_array(r)
        return _scalar_or_array(np.interp(r, self.grid, self.values), r)

    def _inside(self, r0):
        g = np.asarray(self.grid)
        vals = list(np.asarray(self.values)[g <= r0]) + [float(np.interp(r0, self.grid, self.values))]
        return np.array(vals)

    def sup_norm(self, r0: float) -> float:
        return float(np.abs(self._inside(r0)).max())

    def minimum(self, r0: float) -> float:
        return float(self._inside(r0).min())

    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.values)

    def breakpoints(self):
        return tuple(self.grid)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "grid": list(self.grid), "values": list(self.values)}


RadialPotential = Union[ZeroPotential, ConstantPotential, PolynomialPotential, TabulatedPotential]


# ---------------------------------------------------------------------------
# parameters and scenario


@dataclass(frozen=True)
class SpectralParams:
    epsilon: float
    alpha: float = 0.0
    sigma: float = 1.0
    lambda_shift: float = 0.0
    L_const_half: float = 1.0
    L_const: float = 1.0
    remark3_mode: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class Numerics:
    N: int = 1000
    abs_tol: float = 1e-11
    r_inf_factor: float = 4.0
    oracle_2d: bool = False
    oracle_2d_grid: int = 120

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class Scenario:
    disk: Disk
    field: RadialField
    potential: RadialPotential
    params: SpectralParams
    numerics: Numerics = field(default_factory=Numerics)

    @property
    def r0(self) -> float:
        return self.disk.r0

    @property
    def N(self) -> int:
        return self.numerics.N

    @property
    def regime(self) -> str:
        if isinstance(self.field, PowerLawBoundaryField) and self.field.c > 0:
            return GROWING
        return RC

    def to_dict(self) -> dict:
        return {
            "disk": {"r0": self.disk.r0},
            "field": self.field.to_dict(),
            "potential": self.potential.to_dict(),
            "params": self.params.to_dict(),
            "numerics": self.numerics.to_dict(),
        }

    @cached_property
    def content_hash(self) -> str:
        return _digest(self.to_dict())

    @cached_property
    def spectral_hash(self) -> str:
        """Digest of everything the spectrum depends on (no ε, α, σ, Λ, constants)."""
        d = self.to_dict()
        del d["params"]
        return _digest(d)

    def with_grid(self, N: int) -> "Scenario":
        return dataclasses.replace(self, numerics=dataclasses.replace(self.numerics, N=int(N)))

    def with_params(self, **changes) -> "Scenario":
        return dataclasses.replace(self, params=dataclasses.replace(self.params, **changes))

    def with_numerics(self, **changes) -> "Scenario":
        return dataclasses.replace(self, numerics=dataclasses.replace(self.numerics, **changes))


def _canonical(obj):
    if isinstance(obj, float):
        return repr(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, dict):
        return {k: _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    return str(obj)


def _digest(d: dict) -> str:
    # floats go through repr so 1 and 1.0 hash alike only when the parser normalises them
    text = json.dumps(_canonical(d), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# operations


def gauge_a(fld: RadialField, r):
    """Radial gauge a(r) = (1/r)∫_0^r s B(s) ds, with a(0) = 0.

    Closed-form antiderivatives are used for constant, polynomial and
    tabulated (piecewise-linear) profiles; the boundary power law goes
    through adaptive Simpson quadrature.
    """
    if np.any(_as_array(r) < 0):
        raise ValueError("gauge_a requires r >= 0")
    return fld.gauge(r)


@lru_cache(maxsize=64)
def _gauge_cached(fld, nodes: tuple) -> np.ndarray:
    out = np.asarray(fld.gauge(np.array(nodes)), dtype=float)
    out.setflags(write=False)
    return out


def gauge_on_grid(fld: RadialField, r: np.ndarray) -> np.ndarray:
    """gauge_a on a grid, memoised: every angular channel reuses the same nodes."""
    return _gauge_cached(fld, tuple(np.asarray(r, dtype=float).tolist()))


def effective_channel_potential(scenario: Scenario, m: int, r):
    """W_m(r) = -1/(4r²) + (m/r - a(r))² - V(r)."""
    r = _as_array(r)
    a = _as_array(gauge_a(scenario.field, r))
    out = -0.25 / r**2 + (m / r - a) ** 2 - _as_array(scenario.potential(r))
    return _scalar_or_array(out, r)


def field_lower_bound(fld: RadialField) -> float:
    """Parameter K of a boundary power law (a lower bound for inf B)."""
    if isinstance(fld, PowerLawBoundaryField):
        return fld.K
    raise ValueError("lower bound K is defined only for the growing-field profile")


def scenario_errors(scenario: Scenario) -> list[str]:
    """Every violated hypothesis of ``scenario``, one message each."""
    errors = []
    r0 = scenario.disk.r0
    if not (isinstance(r0, (int, float)) and math.isfinite(r0) and r0 > 0):
        return ["disk radius r0 must be positive"]

    fld = scenario.field
    if isinstance(fld, PowerLawBoundaryField):
        if not fld.K > 0:
            errors.append("growing-field regime requires inf B > 0 (K > 0)")
        if fld.c < 0:
            errors.append("power-law field requires c >= 0")
        if not fld.beta > 0:
            errors.append("power-law field requires beta > 0")
        if fld.r0 != r0:
            errors.append("power-law field radius must equal the disk radius")
    elif isinstance(fld, TabulatedField):
        errors += _table_errors("field", fld.grid, fld.values, r0)
    elif isinstance(fld, ConstantField):
        if not math.isfinite(fld.B0):
            errors.append("field B0 must be finite")
    elif isinstance(fld, PolynomialField):
        if not fld.coefficients or not all(math.isfinite(c) for c in fld.coefficients):
            errors.append("field polynomial coefficients must be finite and non-empty")

    pot = scenario.potential
    if isinstance(pot, TabulatedPotential):
        errors += _table_errors("potential", pot.grid, pot.values, r0)
    if isinstance(pot, PolynomialPotential) and (
        not pot.coefficients or not all(math.isfinite(c) for c in pot.coefficients)
    ):
        errors.append("potential polynomial coefficients must be finite and non-empty")
    if not any("potential" in e for e in errors):
        samples = np.linspace(0.0, r0, 2 * scenario.numerics.N + 1)
        vmin = min(float(np.min(pot(samples))), pot.minimum(r0))
        if vmin < 0:
            errors.append("potential must be nonnegative")
        if not math.isfinite(pot.sup_norm(r0)):
            errors.append("potential must be bounded")

    p = scenario.params
    if p.remark3_mode:
        if not 0 < p.epsilon < 1:
            errors.append("epsilon must satisfy 0 < ε < 1 in remark3_mode")
    elif not 0 < p.epsilon <= 0.75:
        errors.append("epsilon must satisfy 0 < ε ≤ 3/4 (set remark3_mode = true for 3/4 ≤ ε < 1)")
    if not 0 <= p.alpha < 1:
        errors.append("alpha must satisfy 0 ≤ α < 1")
    if not p.sigma >= (1 - p.alpha) / 2:
        errors.append("sigma must satisfy σ ≥ (1 - α)/2")
    if not p.lambda_shift >= 0:
        errors.append("lambda_shift must be nonnegative")
    if not (p.L_const_half > 0 and p.L_const > 0):
        errors.append("L constants must be positive")

    n = scenario.numerics
    if not (isinstance(n.N, int) and n.N >= 16):
        errors.append("grid size N must be an integer >= 16")
    if not n.abs_tol > 0:
        errors.append("abs_tol must be positive")
    if not n.r_inf_factor >= 4:
        errors.append("r_inf_factor must be >= 4 (half-line truncation R∞ ≥ 4·r0)")
    if not n.oracle_2d_grid >= 8:
        errors.append("oracle_2d_grid must be >= 8")
    return errors


def _table_errors(name, grid, values, r0):
    g = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float)
    if g.ndim != 1 or g.shape != v.shape or len(g) < 2:
        return [f"{name} table needs matching grid and values of length >= 2"]
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(v))):
        return [f"{name} table entries must be finite"]
    errs = []
    if np.any(np.diff(g) <= 0):
        errs.append(f"{name} table grid must be strictly increasing")
    if g[0] != 0.0 or g[-1] < r0:
        errs.append(f"{name} table grid must cover [0, r0]")
    return errs


def validate_scenario(scenario: Scenario) -> Scenario:
    """Return ``scenario`` unchanged if every hypothesis holds, else raise ScenarioError."""
    errors = scenario_errors(scenario)
    if errors:
        raise ScenarioError(errors)
    return scenario
