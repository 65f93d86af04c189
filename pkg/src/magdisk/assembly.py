"""Global spectrum of the disk operator from its angular-momentum channels."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discretize import build_auxiliary, build_channel
from .eigen import EigenRequest, eigenvalues_below, smallest_eigenvalues
from .model import Scenario, gauge_on_grid

ENVELOPE_SAMPLES = 4096
M_SEARCH_LIMIT = 100000


class AssemblyError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectrumEntry:
    eigenvalue: float
    m: int
    k: int
    error_estimate: float = 0.0


@dataclass
class AssembledSpectrum:
    entries: list
    threshold: float
    m_cut: int
    truncation_certificate: dict
    scenario_hash: str = ""
    abs_tol: float = 0.0

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([e.eigenvalue for e in self.entries])

    @property
    def errors(self) -> np.ndarray:
        return np.array([e.error_estimate for e in self.entries])

    def channel(self, m: int) -> list:
        return [e for e in self.entries if e.m == m]

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "m_cut": self.m_cut,
            "abs_tol": self.abs_tol,
            "truncation_certificate": self.truncation_certificate,
            "entries": [
                {"eigenvalue": e.eigenvalue, "m": e.m, "k": e.k, "error_estimate": e.error_estimate}
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, d: dict, scenario_hash: str = "") -> "AssembledSpectrum":
        entries = [SpectrumEntry(float(e["eigenvalue"]), int(e["m"]), int(e["k"]), float(e["error_estimate"]))
                   for e in d["entries"]]
        return cls(entries, float(d["threshold"]), int(d["m_cut"]), d["truncation_certificate"],
                   scenario_hash, float(d.get("abs_tol", 0.0)))


@dataclass
class MomentResult:
    sigma: float
    value: float
    threshold: float
    contributions: dict = field(default_factory=dict)
    tolerance: float = 0.0

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "value": self.value,
            "threshold": self.threshold,
            "tolerance": self.tolerance,
            "contributions": {str(m): v for m, v in sorted(self.contributions.items())},
        }


def lowest_auxiliary(scenario: Scenario, count: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Lowest eigenvalues of g_{B,V} and their Richardson error estimates (N vs N/2)."""
    tol = scenario.numerics.abs_tol
    fine = smallest_eigenvalues(build_auxiliary(scenario, "gBV"), count, tol)
    coarse = smallest_eigenvalues(build_auxiliary(scenario.with_grid(max(scenario.N // 2, 16)), "gBV"), count, tol)
    return fine, np.abs(fine - coarse) / 3.0


def _form_bound_cutoff(scenario: Scenario, threshold: float, mu1: float):
    # l_m ≥ g_{B,V} + ((1-ε)m² - 1/4)/r0² for m ≠ 0, ε ≤ 3/4
    eps, r0 = scenario.params.epsilon, scenario.r0
    if eps > 0.75:
        return None
    x = ((threshold - mu1) * r0**2 + 0.25) / (1.0 - eps)
    m_cut = 1 if x < 0 else max(1, int(math.floor(math.sqrt(x))))
    while mu1 + ((1 - eps) * (m_cut + 1) ** 2 - 0.25) / r0**2 <= threshold:
        m_cut += 1
    return m_cut


def _envelope_cutoff(scenario: Scenario, threshold: float):
    """Pointwise envelope: for |m| ≥ sup r|a|, W_{±m} ≥ (|m|/r - |a|)² - 1/(4r²) - ‖V‖∞."""
    r0 = scenario.r0
    r = np.unique(np.concatenate([
        np.geomspace(r0 * 1e-6, r0, ENVELOPE_SAMPLES // 2),
        np.linspace(r0 / ENVELOPE_SAMPLES, r0, ENVELOPE_SAMPLES),
    ]))
    if not scenario.field.bounded and scenario.field.beta >= 1:
        return None, math.inf
    a = np.abs(np.asarray(gauge_on_grid(scenario.field, r)))
    m_star = float(np.max(r * a))
    vsup = scenario.potential.sup_norm(r0)

    def env_min(m):
        return float(np.min((m / r - a) ** 2 - 0.25 / r**2)) - vsup

    m_cut = max(1, int(math.ceil(m_star)))
    while env_min(m_cut + 1) <= threshold:
        m_cut += 1
        if m_cut > M_SEARCH_LIMIT:
            return None, m_star
    return m_cut, m_star


def truncation_certificate(scenario: Scenario, threshold: float) -> dict:
    """Both channel-truncation certificates and the cutoff they jointly imply."""
    mu, mu_err = lowest_auxiliary(scenario, 1)
    mu1 = float(mu[0])
    if not math.isfinite(mu1):
        raise AssemblyError("g_{B,V} appears unbounded below")
    mu1_safe = mu1 - 2.0 * float(mu_err[0]) - scenario.numerics.abs_tol
    form = _form_bound_cutoff(scenario, threshold, mu1_safe)
    envelope, m_star = _envelope_cutoff(scenario, threshold)
    valid = [m for m in (form, envelope) if m is not None]
    if not valid:
        raise AssemblyError("no channel-truncation certificate applies to this scenario")
    return {
        "threshold": threshold,
        "mu1": mu1,
        "mu1_error": float(mu_err[0]),
        "form_bound_cutoff": form,
        "envelope_cutoff": envelope,
        "envelope_m_star": m_star,
        "m_cut": min(valid),
        "method": "form_bound" if form is not None and form == min(valid) else "envelope",
    }


def channel_cutoff(scenario: Scenario, threshold: float) -> int:
    """Smallest m_cut ≥ 1 such that no channel with |m| > m_cut has spectrum ≤ threshold."""
    return truncation_certificate(scenario, threshold)["m_cut"]


def _solve_channel(scenario: Scenario, m: int, threshold: float, estimate_errors: bool):
    tol = scenario.numerics.abs_tol
    op = build_channel(scenario, m)
    res = eigenvalues_below(EigenRequest(op.diag, op.offdiag, threshold + tol, tol))
    vals = res.eigenvalues
    if estimate_errors and vals.size:
        coarse = smallest_eigenvalues(build_channel(scenario.with_grid(max(scenario.N // 2, 16)), m), vals.size, tol)
        errs = np.abs(vals - coarse) / 3.0
    else:
        errs = np.zeros_like(vals)
    return vals, errs


def channel_lowest(scenario: Scenario, m: int, count: int = 1, estimate_errors: bool = True):
    """Lowest ``count`` eigenvalues of channel m with Richardson error estimates."""
    tol = scenario.numerics.abs_tol
    vals = smallest_eigenvalues(build_channel(scenario, m), count, tol)
    if not estimate_errors:
        return vals, np.zeros_like(vals)
    coarse = smallest_eigenvalues(build_channel(scenario.with_grid(max(scenario.N // 2, 16)), m), count, tol)
    return vals, np.abs(vals - coarse) / 3.0


def assemble(scenario: Scenario, threshold: float, estimate_errors: bool = True, verify_cutoff: bool = True):
    """All eigenvalues ≤ ``threshold`` over channels |m| ≤ m_cut, sorted ascending.

    Eigenvalues within ``abs_tol`` above the threshold are included. Channel
    provenance is kept per entry, so ±m degeneracies appear twice.
    """
    cert = truncation_certificate(scenario, threshold)
    m_cut = cert["m_cut"]
    entries = []
    for m in range(-m_cut, m_cut + 1):
        try:
            vals, errs = _solve_channel(scenario, m, threshold, estimate_errors)
        except Exception as exc:  # annotate with the channel, keep the type
            raise type(exc)(f"channel m={m}: {exc}") from exc
        entries += [SpectrumEntry(float(v), m, k, float(er)) for k, (v, er) in enumerate(zip(vals, errs))]
    if verify_cutoff:
        beyond = {}
        for m in (m_cut + 1, m_cut + 2, -(m_cut + 1), -(m_cut + 2)):
            low = smallest_eigenvalues(build_channel(scenario, m), 1, scenario.numerics.abs_tol)
            beyond[str(m)] = float(low[0])
        cert["beyond_cutoff_lowest"] = beyond
        cert["verified"] = all(v > threshold + scenario.numerics.abs_tol for v in beyond.values())
    entries.sort(key=lambda e: (e.eigenvalue, e.m, e.k))
    return AssembledSpectrum(entries, float(threshold), m_cut, cert, scenario.content_hash, scenario.numerics.abs_tol)


def _power_plus(x, sigma):
    if sigma == 0:
        return 1.0 if x > 0 else 0.0
    return x**sigma if x > 0 else 0.0


def riesz_mean(spectrum: AssembledSpectrum, lam: float, sigma: float) -> MomentResult:
    """Σ_k (Λ - λ_k)_+^σ over the assembled entries; σ = 0 counts λ_k < Λ.

    The tolerance propagates each entry's error estimate plus the solver
    tolerance through the moment function.
    """
    if lam > spectrum.threshold + spectrum.abs_tol:
        raise ValueError(
            f"spectrum was assembled up to {spectrum.threshold!r} < Λ={lam!r}; the moment would undercount"
        )
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    terms = []
    contrib: dict = {}
    tol_terms = []
    for e in spectrum.entries:  # ascending order, fixed summation order
        t = _power_plus(lam - e.eigenvalue, sigma)
        terms.append(t)
        if t:
            contrib[e.m] = contrib.get(e.m, 0.0) + t
        dev = e.error_estimate + spectrum.abs_tol
        tol_terms.append(abs(_power_plus(lam - e.eigenvalue + dev, sigma) - t))
    return MomentResult(float(sigma), math.fsum(terms), float(lam), dict(sorted(contrib.items())), math.fsum(tol_terms))


def negative_moment(spectrum: AssembledSpectrum, sigma: float) -> MomentResult:
    """tr(H)_-^σ: Σ over nonpositive eigenvalues of |λ_k|^σ."""
    return riesz_mean(spectrum, 0.0, sigma)


def counting_function(spectrum: AssembledSpectrum, lam: float) -> int:
    return int(riesz_mean(spectrum, lam, 0.0).value)
