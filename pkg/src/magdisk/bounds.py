"""Right-hand sides of the eigenvalue-moment inequalities and their verdicts.

Every comparison is reported as a :class:`BoundReport` whose verdict is
a pure function of ``lhs``, ``rhs`` and ``tolerance``:

* ``holds``: lhs ≤ rhs + |rhs|·RTOL
* ``violated_within_tolerance``: lhs ≤ rhs + |rhs|·RTOL + tolerance
* ``violated``: otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .assembly import AssembledSpectrum, channel_lowest, lowest_auxiliary, negative_moment, riesz_mean
from .discretize import build_auxiliary, half_line_radius
from .eigen import EigenRequest, eigenvalues_below
from .model import (
    GROWING,
    ConstantField,
    PowerLawBoundaryField,
    Scenario,
    field_lower_bound,
    gauge_a,
)
from .quadrature import QuadratureError, integrate_piecewise, integrate_positive_part

RTOL = 1e-6

BEREZIN = "Berezin"
LAPTEV = "Laptev"
LIEB_THIRRING = "LiebThirring"
MAGNETIC_LT = "MagneticLT"
MAIN_THEOREM = "MainTheorem"
CHANNEL_LOWER_BOUND = "ChannelLowerBound"
HALF_LINE = "HalfLineComparison"
GROUND_STATE = "GroundStateLowerBound"
REMARK3 = "Remark3Feasibility"

INEQUALITIES = (
    BEREZIN, LAPTEV, LIEB_THIRRING, MAGNETIC_LT, MAIN_THEOREM,
    CHANNEL_LOWER_BOUND, HALF_LINE, GROUND_STATE, REMARK3,
)


class BoundDomainError(ValueError):
    """The inequality is not stated for the requested parameters."""


@dataclass
class BoundReport:
    inequality: str
    lhs: float
    rhs: float
    tolerance: float = 0.0
    constants_used: dict = field(default_factory=dict)
    ratio: float | None = None
    tolerance_model: str = ""
    sigma: float = math.nan
    Lambda: float = 0.0
    details: dict = field(default_factory=dict)
    verdict: str = ""

    def __post_init__(self):
        if not self.verdict:
            self.verdict = verdict(self.lhs, self.rhs, self.tolerance)
        if self.ratio is None:
            self.ratio = _ratio(self.lhs, self.rhs)

    def to_dict(self) -> dict:
        return {
            "inequality": self.inequality,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "sigma": self.sigma,
            "Lambda": self.Lambda,
            "constants_used": self.constants_used,
            "tolerance_model": self.tolerance_model,
            "details": self.details,
        }


def verdict(lhs: float, rhs: float, tolerance: float) -> str:
    edge = rhs + abs(rhs) * RTOL
    if lhs <= edge:
        return "holds"
    if lhs <= edge + tolerance:
        return "violated_within_tolerance"
    return "violated"


def _ratio(lhs, rhs):
    if rhs == 0:
        return 0.0 if lhs == 0 else math.inf
    return lhs / rhs


# ---------------------------------------------------------------------------
# semiclassical bounds


@dataclass(frozen=True)
class SemiclassicalConstant:
    sigma: float
    d: int
    value: float


def semiclassical_constant(sigma: float, d: int = 2) -> SemiclassicalConstant:
    """L^cl_{σ,d} = Γ(σ+1) / ((4π)^{d/2} Γ(σ+1+d/2))."""
    if sigma < 0:
        raise BoundDomainError("semiclassical constant needs σ ≥ 0")
    if d not in (1, 2):
        raise BoundDomainError("only d = 1 and d = 2 are supported")
    value = math.exp(math.lgamma(sigma + 1) - math.lgamma(sigma + 1 + d / 2)) / (4 * math.pi) ** (d / 2)
    return SemiclassicalConstant(sigma, d, value)


def berezin_rhs(scenario: Scenario, lam: float, sigma: float) -> float:
    if sigma < 1:
        raise BoundDomainError(f"Berezin bound needs σ ≥ 1 (got {sigma}); use the Laptev variant for 0 ≤ σ < 1")
    if lam < 0:
        raise BoundDomainError("Λ must be nonnegative")
    return semiclassical_constant(sigma, 2).value * scenario.disk.area * lam ** (sigma + 1)


def laptev_rhs(scenario: Scenario, lam: float, sigma: float) -> float:
    if not 0 <= sigma < 1:
        raise BoundDomainError(f"Laptev bound needs 0 ≤ σ < 1 (got {sigma}); use the Berezin variant for σ ≥ 1")
    if lam < 0:
        raise BoundDomainError("Λ must be nonnegative")
    prefactor = 2.0 * (sigma / (sigma + 1)) ** sigma  # 0**0 == 1
    return prefactor * semiclassical_constant(sigma, 2).value * scenario.disk.area * lam ** (sigma + 1)


def lt_rhs(scenario: Scenario, sigma: float, magnetic: bool = False) -> float:
    """L^cl_{σ,2} · 2π ∫_0^{r0} V(r)^{σ+1} r dr (identical with or without field)."""
    if sigma < 1.5:
        raise BoundDomainError(f"Lieb-Thirring bound needs σ ≥ 3/2 (got {sigma})")
    pot = scenario.potential
    if pot.is_zero():
        return 0.0
    r0 = scenario.r0
    pts = [0.0, r0] + [x for x in pot.breakpoints() if 0 < x < r0]

    def f(r):
        return max(float(pot(r)), 0.0) ** (sigma + 1) * r

    return semiclassical_constant(sigma, 2).value * 2 * math.pi * integrate_piecewise(f, pts)


def field_class(scenario: Scenario) -> str:
    fld = scenario.field
    if fld.is_zero():
        return "zero"
    if isinstance(fld, ConstantField) or (isinstance(fld, PowerLawBoundaryField) and fld.c == 0):
        return "constant"
    return "general"


def semiclassical_applicability(scenario: Scenario, sigma: float, which: str) -> str | None:
    """Reason the inequality is not stated for this scenario, or None if it is."""
    cls = field_class(scenario)
    if which in (BEREZIN, LAPTEV):
        if not scenario.potential.is_zero():
            return "the Riesz-mean bounds concern V = 0"
        if which == BEREZIN:
            if sigma < 1:
                return "σ < 1"
            if cls == "general" and sigma < 1.5:
                return "non-constant fields need σ ≥ 3/2"
        else:
            if not 0 <= sigma < 1:
                return "Laptev variant needs 0 ≤ σ < 1"
            if cls == "general":
                return "Laptev variant is stated for B = 0 or constant B"
        return None
    if which == LIEB_THIRRING:
        if cls != "zero":
            return "non-magnetic Lieb-Thirring needs B = 0"
        return None if sigma >= 1.5 else "σ < 3/2"
    if which == MAGNETIC_LT:
        if cls == "zero":
            return "magnetic Lieb-Thirring is reported only for B ≠ 0"
        return None if sigma >= 1.5 else "σ < 3/2"
    return None


def berezin_report(scenario: Scenario, spectrum: AssembledSpectrum, lam: float, sigma: float) -> BoundReport:
    which = BEREZIN if sigma >= 1 else LAPTEV
    rhs = berezin_rhs(scenario, lam, sigma) if which == BEREZIN else laptev_rhs(scenario, lam, sigma)
    mom = riesz_mean(spectrum, lam, sigma)
    const = semiclassical_constant(sigma, 2).value
    constants = {"L_cl": const}
    if which == LAPTEV:
        constants["prefactor"] = 2.0 * (sigma / (sigma + 1)) ** sigma
    return BoundReport(
        which, mom.value, rhs, mom.tolerance, constants, sigma=sigma, Lambda=lam,
        tolerance_model="propagated Richardson error of each eigenvalue + solver abs_tol",
        details={"count": int(riesz_mean(spectrum, lam, 0.0).value), "area": scenario.disk.area},
    )


def lt_report(scenario: Scenario, spectrum: AssembledSpectrum, sigma: float) -> BoundReport:
    magnetic = field_class(scenario) != "zero"
    mom = negative_moment(spectrum, sigma)
    rhs = lt_rhs(scenario, sigma, magnetic)
    return BoundReport(
        MAGNETIC_LT if magnetic else LIEB_THIRRING, mom.value, rhs, mom.tolerance,
        {"L_cl": semiclassical_constant(sigma, 2).value}, sigma=sigma,
        tolerance_model="propagated Richardson error of each eigenvalue + solver abs_tol + quadrature rtol 1e-10",
    )


# ---------------------------------------------------------------------------
# main theorem


@dataclass
class MainTheoremTerms:
    I1: float
    I2: float
    I3: float
    bracket: float
    rhs: float
    constants: dict

    def to_dict(self) -> dict:
        return {"I1": self.I1, "I2": self.I2, "I3": self.I3, "bracket": self.bracket, "rhs": self.rhs,
                "constants": self.constants}


def _sup_estimate(fn, lo, hi, n=4096):
    """Sup of fn on [lo, hi]: dense sampling then bounded refinement around the best sample."""
    xs = np.linspace(lo, hi, n + 1)
    ys = np.asarray(fn(xs), dtype=float)
    i = int(np.argmax(ys))
    best = float(ys[i])
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, n)]
    if b > a:
        res = minimize_scalar(lambda x: -float(np.asarray(fn(np.array([x])))[0]), bounds=(a, b),
                              method="bounded", options={"xatol": 1e-12 * max(1.0, hi)})
        best = max(best, -float(res.fun))
    return best


def _gauge_unbounded(scenario: Scenario) -> bool:
    fld = scenario.field
    return isinstance(fld, PowerLawBoundaryField) and fld.c > 0 and fld.beta >= 1


def gauge_sup(scenario: Scenario, n: int = 4096) -> float:
    """A = sup_{r<r0} |a(r)| (inf when the boundary singularity is not integrable)."""
    if _gauge_unbounded(scenario):
        return math.inf
    return _sup_estimate(lambda r: np.abs(gauge_a(scenario.field, r)), 0.0, scenario.r0, n)


def _positive_start(scenario: Scenario, coeff: float) -> float:
    """Radius below which coeff·a² + V - 1/(4r²) < 0 is guaranteed."""
    r0 = scenario.r0
    if _gauge_unbounded(scenario):
        # a is still bounded on [0, r0/2]
        amax = _sup_estimate(lambda r: np.abs(gauge_a(scenario.field, r)), 0.0, r0 / 2, 1024) * 1.25
        c = coeff * amax**2 + scenario.potential.sup_norm(r0)
        return min(r0 / 2, 0.5 / math.sqrt(c)) if c > 0 else r0 / 2
    amax = gauge_sup(scenario, 1024) * 1.25
    c = coeff * amax**2 + scenario.potential.sup_norm(r0)
    if c <= 0:
        return r0
    return min(r0, 0.5 / math.sqrt(c))


def main_theorem_integrals(scenario: Scenario) -> tuple[float, float, float]:
    p = scenario.params
    eps, alpha, sigma, r0 = p.epsilon, p.alpha, p.sigma, scenario.r0
    coeff = 1.0 / eps - 1.0
    fld, pot = scenario.field, scenario.potential
    bps = tuple(x for x in set(fld.breakpoints()) | set(pot.breakpoints()) if 0 < x < r0)

    def g12(r):
        r = np.asarray(r, dtype=float)
        a = np.asarray(gauge_a(fld, r))
        with np.errstate(divide="ignore"):
            return coeff * a**2 + np.asarray(pot(r)) - 0.25 / r**2

    def g3(r):
        r = np.asarray(r, dtype=float)
        return np.asarray(pot(r)) - np.asarray(gauge_a(fld, r)) ** 2

    def weight(r):
        return r**alpha if alpha else 1.0

    start = _positive_start(scenario, coeff)
    try:
        i1 = integrate_positive_part(g12, sigma + 1 + alpha / 2, weight, start, r0, bps)
        i2 = integrate_positive_part(g12, sigma + (1 + alpha) / 2, weight, start, r0, bps)
        i3 = integrate_positive_part(g3, sigma + (1 + alpha) / 2, weight, 0.0, r0, bps)
    except QuadratureError as exc:
        raise QuadratureError(f"main-theorem integrals: {exc}") from exc
    return i1, i2, i3


def main_theorem_rhs(scenario: Scenario) -> MainTheoremTerms:
    """I1, I2, I3 and (2r0 L'/√(1-ε)) I1 + (L/√(1-ε)) I2 + L I3."""
    p = scenario.params
    i1, i2, i3 = main_theorem_integrals(scenario)
    root = math.sqrt(1.0 - p.epsilon)
    bracket = 2 * scenario.r0 / root * i1 + i2 / root + i3
    rhs = 2 * scenario.r0 * p.L_const_half / root * i1 + p.L_const / root * i2 + p.L_const * i3
    return MainTheoremTerms(i1, i2, i3, bracket, rhs, {"L_const_half": p.L_const_half, "L_const": p.L_const})


def required_constants(scenario: Scenario, lhs: float, terms: MainTheoremTerms | None = None) -> float:
    """Smallest single L with lhs ≤ L·bracket; inf flags a vacuous bound (bracket 0 < lhs)."""
    if lhs == 0:
        return 0.0
    terms = terms or main_theorem_rhs(scenario)
    if terms.bracket == 0:
        return math.inf
    return lhs / terms.bracket


def main_theorem_report(scenario: Scenario, spectrum: AssembledSpectrum) -> BoundReport:
    sigma = scenario.params.sigma
    mom = negative_moment(spectrum, sigma)
    terms = main_theorem_rhs(scenario)
    req = required_constants(scenario, mom.value, terms)
    details = terms.to_dict()
    details.update({"required_constant": req, "vacuous": math.isinf(req),
                    "epsilon": scenario.params.epsilon, "alpha": scenario.params.alpha})
    return BoundReport(
        MAIN_THEOREM, mom.value, terms.rhs, mom.tolerance, terms.constants, ratio=req,
        tolerance_model="propagated Richardson error of each eigenvalue + solver abs_tol; integrals rtol 1e-10",
        sigma=sigma, details=details,
    )


# ---------------------------------------------------------------------------
# proof-chain checks


def channel_lower_bound_report(scenario: Scenario, spectrum: AssembledSpectrum | None = None,
                               m_cut: int | None = None) -> BoundReport:
    """Check λ₁(channel m) ≥ μ₁ + ((1-ε)m² - 1/4)/r0² for 0 < |m| ≤ m_cut.

    Reported for the channel with the smallest margin; ``lhs`` is the
    lower bound, ``rhs`` the channel ground state.
    """
    eps, r0 = scenario.params.epsilon, scenario.r0
    if eps > 0.75:
        raise BoundDomainError("the channel lower bound needs ε ≤ 3/4")
    if m_cut is None:
        m_cut = spectrum.m_cut if spectrum is not None else 1
    mu, mu_err = lowest_auxiliary(scenario, 1)
    mu1, mu1_err = float(mu[0]), float(mu_err[0])
    rows = []
    for m in [k for j in range(1, m_cut + 1) for k in (j, -j)]:
        lam, err = channel_lowest(scenario, m, 1)
        bound = mu1 + ((1 - eps) * m * m - 0.25) / r0**2
        tol = float(err[0]) + mu1_err + 2 * scenario.numerics.abs_tol
        rows.append({"m": m, "lambda1": float(lam[0]), "bound": bound, "tol": tol, "margin": float(lam[0]) - bound})
    worst = min(rows, key=lambda row: (row["margin"] - row["tol"], row["m"]))
    return BoundReport(
        CHANNEL_LOWER_BOUND, worst["bound"], worst["lambda1"], worst["tol"],
        {"epsilon": eps}, sigma=scenario.params.sigma,
        tolerance_model="Richardson error of λ₁(channel) + Richardson error of μ₁ + 2 abs_tol",
        details={"mu1": mu1, "m_cut": m_cut, "worst_m": worst["m"], "channels": rows},
    )


def half_line_spectra(scenario: Scenario) -> dict:
    """Negative eigenvalues μ_k of g_{B,V} and ν_k of g* (on R∞ and 2R∞)."""
    tol = scenario.numerics.abs_tol
    gbv = build_auxiliary(scenario, "gBV")
    mu = eigenvalues_below(EigenRequest(gbv.diag, gbv.offdiag, 0.0, tol)).eigenvalues
    r_inf = half_line_radius(scenario, float(mu[0]) if mu.size else None)
    star = build_auxiliary(scenario, "gStar", r_inf)
    nu = eigenvalues_below(EigenRequest(star.diag, star.offdiag, 0.0, tol)).eigenvalues
    star2 = build_auxiliary(scenario, "gStar", 2 * star.r_inf)
    nu2 = eigenvalues_below(EigenRequest(star2.diag, star2.offdiag, 0.0, tol)).eigenvalues
    k = min(nu.size, nu2.size)
    trunc = float(np.max(np.abs(nu[:k] - nu2[:k]))) if k else 0.0
    return {"mu": mu, "nu": nu, "nu_doubled": nu2, "r_inf": star.r_inf, "truncation_error": trunc}


def half_line_reports(scenario: Scenario, spectra: dict | None = None) -> list[BoundReport]:
    """Σ|μ_k|^δ ≤ Σ|ν_k|^δ for δ ∈ {σ, σ + 1/2}."""
    spectra = spectra or half_line_spectra(scenario)
    mu, nu = spectra["mu"], spectra["nu"]
    out = []
    for delta in (scenario.params.sigma, scenario.params.sigma + 0.5):
        lhs = math.fsum(np.abs(mu) ** delta)
        rhs = math.fsum(np.abs(nu) ** delta)
        tol = len(mu) * delta * (np.max(np.abs(mu)) ** max(delta - 1, 0) if len(mu) else 0) * scenario.numerics.abs_tol
        out.append(BoundReport(
            HALF_LINE, lhs, rhs, float(tol), {}, sigma=delta,
            tolerance_model="solver abs_tol propagated; grids nested so discrete interlacing is exact",
            details={"n_mu": int(len(mu)), "n_nu": int(len(nu)), "r_inf": spectra["r_inf"],
                     "truncation_error": spectra["truncation_error"]},
        ))
    return out


def weighted_lt_ratios(scenario: Scenario, spectra: dict | None = None) -> dict:
    """Σ|ν_k|^{σ+1/2} and Σ|ν_k|^σ divided by their weighted-integral majorants."""
    spectra = spectra or half_line_spectra(scenario)
    nu = np.abs(spectra["nu"])
    sigma = scenario.params.sigma
    i1, i2, _ = main_theorem_integrals(scenario)
    s_half = math.fsum(nu ** (sigma + 0.5))
    s = math.fsum(nu**sigma)
    return {
        "sum_half": s_half,
        "sum": s,
        "ratio_half": _ratio(s_half, i1),
        "ratio": _ratio(s, i2),
    }


def remark3_feasibility(scenario: Scenario) -> BoundReport:
    """sup(V - 1/(4r²)) < -A²/3 with A = sup_{r<r0} |a(r)|.

    Also evaluates the ε-parametric form sup(V - 1/(4r²)) < -(1/ε - 1)A²
    at the scenario's ε, and the smallest ε making the first two integrands
    vanish.
    """
    r0 = scenario.r0
    lo = r0 * 1e-6
    A = gauge_sup(scenario)
    S = _sup_estimate(lambda r: np.asarray(scenario.potential(r)) - 0.25 / np.asarray(r) ** 2, lo, r0)
    threshold = -(A**2) / 3.0
    feasible = S < threshold
    eps = scenario.params.epsilon
    eps_threshold = -(1.0 / eps - 1.0) * A**2
    if S < 0 and math.isfinite(A):
        eps_min = A**2 / (A**2 - S)
    else:
        eps_min = math.nan
    details = {
        "A": A,
        "sup_V_minus_inverse_square": S,
        "feasible": bool(feasible),
        "admissible_epsilon": max(0.75, eps_min) if feasible else None,
        "epsilon_min": eps_min,
        "epsilon": eps,
        "epsilon_condition": bool(S < eps_threshold),
        "epsilon_threshold": eps_threshold,
    }
    return BoundReport(
        REMARK3, S, threshold, 0.0, {}, details=details, sigma=scenario.params.sigma,
        verdict="holds" if feasible else "violated",
        tolerance_model="strict inequality on sampled-and-refined suprema",
    )


def ground_state_lower_bound(scenario: Scenario, lambda1: float, tol: float = 0.0) -> BoundReport | None:
    """λ₁ ≥ K - ‖V‖∞ in the growing-field regime; None (skipped) otherwise."""
    if scenario.regime != GROWING:
        return None
    K = field_lower_bound(scenario.field)
    vsup = scenario.potential.sup_norm(scenario.r0)
    return BoundReport(
        GROUND_STATE, float(K - vsup), float(lambda1), float(tol), {"K": K, "V_sup": vsup},
        sigma=scenario.params.sigma,
        tolerance_model="Richardson error of λ₁ + solver abs_tol",
        details={"inf_B": float(scenario.field(0.0))},
    )
