"""Tridiagonal discretizations of the angular-momentum channel operators.

Three families are built here:

* ``build_channel``: P1 finite elements for the weighted form
  ``∫(|u'|² + (m/r - a)²|u|² - V|u|²) r dr`` with lumped mass, returned
  mass-scaled as ``M^{-1/2} K M^{-1/2}``;
* ``build_transformed_channel``: three-point differences for
  ``-d²/dr² - 1/(4r²) + (m/r - a)² - V`` on a cell-centred grid;
* ``build_auxiliary``: the comparison operators ``g_{B,V}`` on (0, r0),
  its zero extension ``g*`` to a truncated half-line, and the m = 0
  transformed channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eigen import smallest_eigenvalues
from .model import Scenario, gauge_on_grid

MIN_GRID = 16
R_INF_CAP = 100.0


class DiscretizationError(ValueError):
    pass


@dataclass
class ChannelOperator:
    m: int
    grid: np.ndarray
    diag: np.ndarray
    offdiag: np.ndarray
    mass_scaling: np.ndarray
    regime: str
    kind: str = "h_m"
    h: float = 0.0

    @property
    def size(self) -> int:
        return self.diag.shape[0]

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


@dataclass
class AuxiliaryOperator(ChannelOperator):
    r_inf: float | None = None
    info: dict = field(default_factory=dict)


def _check(scenario: Scenario):
    if scenario.N < MIN_GRID:
        raise DiscretizationError(f"grid size N={scenario.N} is below the minimum {MIN_GRID}")


def _finite(values, grid, what, m):
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        i = int(bad[0])
        raise DiscretizationError(f"non-finite {what} for channel m={m} at node index {i} (r={grid[i]!r})")


def build_channel(scenario: Scenario, m: int) -> ChannelOperator:
    """Weighted-form finite elements for channel ``m`` on h = r0/(N+1).

    Stiffness ``∫|u'|² r dr`` is exact for P1 elements; the potential
    ``(m/r - a)² - V`` is sampled at cell midpoints and weighted by the
    element's lumped mass, so a constant shift of V moves every eigenvalue
    by exactly that constant. The node at r = 0 is kept for m = 0
    (natural condition of the closed form) and removed for m ≠ 0, where
    the centrifugal term forces u(0) = 0.
    """
    _check(scenario)
    m = int(m)
    N, r0 = scenario.N, scenario.r0
    h = r0 / (N + 1)
    nodes = np.arange(N + 2) * h
    nodes[-1] = r0
    xa, xb = nodes[:-1], nodes[1:]
    mid = 0.5 * (xa + xb)
    a = gauge_on_grid(scenario.field, mid)
    w = (m / mid - a) ** 2 - np.asarray(scenario.potential(mid), dtype=float)
    _finite(w, mid, "channel potential", m)

    lump_a = h * (2 * xa + xb) / 6.0
    lump_b = h * (xa + 2 * xb) / 6.0
    stiff = mid / h
    n = N + 2
    K = np.zeros(n)
    M = np.zeros(n)
    P = np.zeros(n)
    K[:-1] += stiff
    K[1:] += stiff
    M[:-1] += lump_a
    M[1:] += lump_b
    P[:-1] += w * lump_a
    P[1:] += w * lump_b

    first = 0 if m == 0 else 1
    keep = slice(first, n - 1)
    mass = M[keep]
    diag = (K[keep] + P[keep]) / mass
    off = -stiff[first : n - 2] / np.sqrt(mass[:-1] * mass[1:])
    return ChannelOperator(m, nodes[keep].copy(), diag, off, mass, scenario.regime, "h_m", h)


def _offset_grid(scenario: Scenario):
    # r_j = (j - 1/2) h, j = 1..N; zero ghosts at r = -h/2 and r = r0
    N, r0 = scenario.N, scenario.r0
    h = r0 / (N + 0.5)
    r = (np.arange(1, N + 1) - 0.5) * h
    return r, h


def inverse_square_term(r: np.ndarray, h: float, r_end: float) -> np.ndarray:
    """Nodal values standing in for -1/(4r²) on the offset grid.

    Sampled so that √r is annihilated by the discrete operator
    ``-δ² + q`` (with the zero ghost at -h/2); this fixes the regular
    behaviour at r = 0 of the closed form, and q_j = -1/(4r_j²) + O(h²/r_j⁴).
    """
    s = np.sqrt(r)
    nxt = np.append(s[1:], math.sqrt(r_end))
    prev = np.insert(s[:-1], 0, 0.0)
    return (nxt - 2.0 * s + prev) / (h * h * s)


def build_transformed_channel(scenario: Scenario, m: int) -> ChannelOperator:
    """Three-point differences for l_m = -d²/dr² - 1/(4r²) + (m/r - a)² - V."""
    _check(scenario)
    m = int(m)
    r, h = _offset_grid(scenario)
    a = gauge_on_grid(scenario.field, r)
    q = inverse_square_term(r, h, r[-1] + h)
    w = q + (m / r - a) ** 2 - np.asarray(scenario.potential(r), dtype=float)
    _finite(w, r, "channel potential", m)
    diag = 2.0 / h**2 + w
    off = np.full(r.size - 1, -1.0 / h**2)
    return ChannelOperator(m, r, diag, off, np.ones_like(r), scenario.regime, "l_m", h)


def auxiliary_potential(scenario: Scenario, r: np.ndarray) -> np.ndarray:
    """-(1/ε - 1) a(r)² - V(r) on (0, r0), zero from r0 on."""
    eps = scenario.params.epsilon
    r = np.asarray(r, dtype=float)
    inside = r < scenario.r0
    out = np.zeros_like(r)
    ri = r[inside]
    a = gauge_on_grid(scenario.field, ri)
    out[inside] = -(1.0 / eps - 1.0) * a**2 - np.asarray(scenario.potential(ri), dtype=float)
    return out


def _fd_operator(scenario, r, h, potential, kind, r_inf=None, info=None):
    _finite(potential, r, f"{kind} potential", 0)
    diag = 2.0 / h**2 + potential
    off = np.full(r.size - 1, -1.0 / h**2)
    return AuxiliaryOperator(0, r, diag, off, np.ones_like(r), scenario.regime, kind, h, r_inf, info or {})


def half_line_radius(scenario: Scenario, mu1: float | None = None) -> float:
    """Truncation radius max(f·r0, r0 + 10/√|ν̂|), with ν̂ estimated by μ₁ ≤ 0."""
    r0 = scenario.r0
    r_inf = scenario.numerics.r_inf_factor * r0
    if mu1 is not None and mu1 < 0:
        r_inf = max(r_inf, r0 + 10.0 / math.sqrt(-mu1))
    return min(r_inf, R_INF_CAP * r0)


def build_auxiliary(scenario: Scenario, kind: str, r_inf: float | None = None) -> AuxiliaryOperator:
    """Build ``gBV``, ``gStar`` or ``m0channel``.

    ``gBV`` and ``gStar`` share the node spacing h = r0/(N+1) and the nodes
    jh, so the ``gBV`` matrix is the leading principal submatrix of the
    ``gStar`` matrix; domain monotonicity then holds exactly for the
    discrete eigenvalues by Cauchy interlacing.
    """
    _check(scenario)
    N, r0 = scenario.N, scenario.r0
    if kind == "m0channel":
        op = build_transformed_channel(scenario, 0)
        return AuxiliaryOperator(0, op.grid, op.diag, op.offdiag, op.mass_scaling, op.regime, kind, op.h)
    h = r0 / (N + 1)
    if kind == "gBV":
        r = np.arange(1, N + 1) * h
        op = _fd_operator(scenario, r, h, auxiliary_potential(scenario, r), kind)
        return op
    if kind == "gStar":
        if r_inf is None:
            gbv = build_auxiliary(scenario, "gBV")
            mu1 = float(smallest_eigenvalues(gbv, 1, scenario.numerics.abs_tol)[0])
            r_inf = half_line_radius(scenario, mu1)
        if r_inf < 4 * r0 * (1 - 1e-12):
            raise DiscretizationError(f"half-line truncation R∞={r_inf!r} must be at least 4·r0")
        n_star = int(math.ceil(r_inf / h)) - 1
        r = np.arange(1, n_star + 1) * h
        r_end = (n_star + 1) * h
        return _fd_operator(scenario, r, h, auxiliary_potential(scenario, r), kind, r_end, {"requested_r_inf": r_inf})
    raise ValueError(f"unknown auxiliary operator kind {kind!r}")
