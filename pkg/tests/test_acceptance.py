"""Acceptance criteria 1-13, each run at its stated tolerance.

Every test records a PASS/FAIL line through the ``criterion`` fixture, then
asserts. The lines are repeated in the pytest terminal summary.
"""

import math
import time

import numpy as np
import pytest

from magdisk.assembly import assemble, channel_lowest
from magdisk.bounds import (
    berezin_report,
    channel_lower_bound_report,
    ground_state_lower_bound,
    half_line_reports,
    lt_report,
    main_theorem_report,
    remark3_feasibility,
)
from magdisk.discretize import build_channel, build_transformed_channel
from magdisk.eigen import smallest_eigenvalues
from magdisk.io import render
from magdisk.model import (
    ConstantField,
    ConstantPotential,
    PolynomialField,
    PowerLawBoundaryField,
    ZeroPotential,
)
from magdisk.oracles import bessel_sorted_spectrum, cartesian_2d_spectrum, landau_limit_check
from magdisk.runner import run_verify

from conftest import make_scenario
from corpus import corpus


@pytest.fixture(scope="module")
def corpus_spectra():
    """Corpus at N and 2N with spectra assembled up to 0 (negative spectrum)."""
    out = []
    for (name, sc), (_, sc2) in zip(corpus(1000), corpus(2000)):
        out.append((name, sc, sc2, assemble(sc, 0.0), assemble(sc2, 0.0)))
    return out


def _bessel_errors(N):
    sc = make_scenario(N=N)
    ref = np.array([v for v, _, _ in bessel_sorted_spectrum(1.0, 40.0)[:6]])
    sp = assemble(sc, ref[-1] + 1.0)
    got = sp.eigenvalues[:6]
    return np.abs(got - ref) / ref


def test_criterion_01_bessel_regression(criterion):
    t0 = time.perf_counter()
    err = _bessel_errors(4000)
    runtime = time.perf_counter() - t0
    err2 = _bessel_errors(8000)
    ratios = err / err2
    ok = bool(np.all(err < 5e-4) and np.all((ratios >= 3.5) & (ratios <= 4.5)) and runtime < 10)
    criterion(1, ok, f"max rel err {err.max():.2e}, ratios {np.round(ratios, 3).tolist()}, {runtime:.2f} s")
    assert ok


def _richardson(builder, sc, m, count):
    fine = smallest_eigenvalues(builder(sc, m), count, sc.numerics.abs_tol)
    coarse = smallest_eigenvalues(builder(sc.with_grid(sc.N // 2), m), count, sc.numerics.abs_tol)
    return fine, np.abs(fine - coarse) / 3.0


def test_criterion_02_unitary_equivalence(criterion):
    rng = np.random.default_rng(20261014)
    worst = 0.0
    ok = True
    for i in range(5):
        r0 = float(rng.uniform(0.5, 2.0))
        if i % 2 == 0:
            fld = ConstantField(float(rng.uniform(0.0, 10.0)))
        else:
            fld = PolynomialField(tuple(float(c) for c in rng.uniform(0.0, 5.0, size=3)))
        sc = make_scenario(fld, ConstantPotential(float(rng.uniform(0.0, 20.0))), r0=r0, N=2000)
        for m in (0, 1, 4):
            a, ea = _richardson(build_channel, sc, m, 3)
            b, eb = _richardson(build_transformed_channel, sc, m, 3)
            bound = 10 * (ea + eb) + 2 * sc.numerics.abs_tol
            worst = max(worst, float(np.max(np.abs(a - b) / bound)))
            ok &= bool(np.all(np.abs(a - b) <= bound))
    criterion(2, ok, f"max |Δ| / (10 Σ Richardson) = {worst:.3f}")
    assert ok


def test_criterion_03_diamagnetic(criterion):
    base, base_err = channel_lowest(make_scenario(N=2000), 0, 1)
    lam0 = float(base[0])
    rows = []
    for B0 in (1.0, 5.0, 20.0):
        sc = make_scenario(ConstantField(B0), ZeroPotential(), N=2000)
        sp = assemble(sc, lam0 + 2 * B0 + 5)
        e = sp.entries[0]
        tol = e.error_estimate + float(base_err[0]) + 2 * sc.numerics.abs_tol
        rows.append((B0, e.eigenvalue, e.eigenvalue >= lam0 - tol))
    ok = all(r[2] for r in rows)
    criterion(3, ok, f"λ1(0)={lam0:.6f}; " + ", ".join(f"λ1({b:g})={v:.6f}" for b, v, _ in rows))
    assert ok


def test_criterion_04_landau(criterion):
    sc = make_scenario(ConstantField(16.0), ZeroPotential(), r0=2.0, N=4000)
    lam1 = float(assemble(sc, 20.0).entries[0].eigenvalue)
    res = landau_limit_check(16.0, 2.0, lam1)
    ratio = res.parameters["ratio"]
    ok = 1 - 1e-3 <= ratio <= 1.01
    criterion(4, ok, f"λ1/B0 = {ratio:.8f}")
    assert ok


def test_criterion_05_channel_lower_bound(criterion, corpus_spectra):
    bad = []
    for name, sc, _, sp, _ in corpus_spectra:
        m_cut = max(sp.m_cut, 1)
        rep = channel_lower_bound_report(sc, sp, m_cut)
        if rep.verdict != "holds":
            bad.append(name)
    ok = not bad
    criterion(5, ok, f"{len(corpus_spectra)} scenarios, failing: {bad or 'none'}")
    assert ok


def test_criterion_06_half_line(criterion, corpus_spectra):
    checked, bad = 0, []
    for name, sc, _, _, _ in corpus_spectra:
        reps = half_line_reports(sc)
        if reps[0].details["n_mu"] == 0:
            continue
        checked += 1
        for rep in reps:
            if not rep.lhs <= rep.rhs * (1 + 1e-6) + rep.tolerance:
                bad.append((name, rep.sigma))
    ok = checked > 0 and not bad
    criterion(6, ok, f"{checked} scenarios with negative μ, failing: {bad or 'none'}")
    assert ok


def test_criterion_07_berezin_and_laptev(criterion):
    lams = np.linspace(2.0, 80.0, 20)
    bad, n = [], 0
    cases = [(B0, s) for B0 in (0.0, 5.0) for s in (1.0, 1.5, 2.0)] + [(0.0, 0.0), (0.0, 0.5)]
    spectra = {}
    for B0, sigma in cases:
        if B0 not in spectra:
            sc = make_scenario(ConstantField(B0), ZeroPotential(), N=1000)
            spectra[B0] = (sc, assemble(sc, float(lams[-1])))
        sc, sp = spectra[B0]
        for lam in lams:
            rep = berezin_report(sc, sp, float(lam), sigma)
            n += 1
            if rep.verdict != "holds":
                bad.append((B0, sigma, float(lam), rep.verdict))
    ok = not bad
    criterion(7, ok, f"{n} Λ points, failing: {bad or 'none'}")
    assert ok


def test_criterion_08_lieb_thirring(criterion):
    rows = []
    for V0 in (5.0, 20.0):
        for B0 in (0.0, 5.0):
            sc = make_scenario(ConstantField(B0), ConstantPotential(V0), sigma=1.5, N=1000)
            rep = lt_report(sc, assemble(sc, 0.0), 1.5)
            rows.append((V0, B0, rep.inequality, rep.ratio, rep.verdict))
    ok = all(r[4] == "holds" for r in rows)
    criterion(8, ok, "; ".join(f"V0={v:g} B0={b:g} {i} ratio={q:.3g} {d}" for v, b, i, q, d in rows))
    assert ok


def test_criterion_09_main_theorem_corpus(criterion, corpus_spectra):
    ok, worst, rows = True, 0.0, []
    for name, sc, sc2, sp, sp2 in corpus_spectra:
        r1, r2 = main_theorem_report(sc, sp), main_theorem_report(sc2, sp2)
        c1, c2 = r1.details["required_constant"], r2.details["required_constant"]
        ok &= math.isfinite(c1) and math.isfinite(c2)
        if c1 == 0 and c2 == 0:
            drift = 0.0
        else:
            drift = abs(c2 - c1) / abs(c1) if c1 else math.inf
        ok &= drift <= 0.2
        worst = max(worst, c1)
        if sc.field.is_zero() and sc.potential.is_zero():
            d = r1.details
            ok &= r1.lhs == 0 and d["I1"] == 0 and d["I2"] == 0 and d["I3"] == 0
        rows.append(f"{name}={c1:.4g}")
    criterion(9, ok, f"max required constant {worst:.6g}; " + ", ".join(rows))
    assert ok


def test_criterion_10_remark3(criterion):
    feas = remark3_feasibility(make_scenario(ConstantField(1.0), ZeroPotential(), epsilon=0.75))
    infeas = remark3_feasibility(make_scenario(ConstantField(4.0), ZeroPotential(), epsilon=0.75))
    # A = B0 r0 / 2 and sup(V - 1/(4r²)) = -1/4 at r = r0 = 1
    arith_feasible = -0.25 < -(0.5**2) / 3
    arith_infeasible = not -0.25 < -(2.0**2) / 3
    eps = feas.details["admissible_epsilon"]
    sc = make_scenario(ConstantField(1.0), ZeroPotential(), epsilon=eps)
    terms = main_theorem_report(sc, assemble(sc, 0.0)).details
    ok = (feas.details["feasible"] == arith_feasible and infeas.details["feasible"] == (not arith_infeasible)
          and feas.verdict == "holds" and infeas.verdict == "violated"
          and terms["I1"] == 0 and terms["I2"] == 0)
    criterion(10, ok, f"B0=1 feasible={feas.details['feasible']} (ε={eps}), "
                      f"B0=4 feasible={infeas.details['feasible']}, I1={terms['I1']}, I2={terms['I2']}")
    assert ok


def test_criterion_11_growing_field(criterion):
    sc = make_scenario(PowerLawBoundaryField(10.0, 1.0, 0.5, 1.0), ConstantPotential(2.0), N=1000)
    sp = assemble(sc, 12.0)
    e = sp.entries[0]
    rep = ground_state_lower_bound(sc, e.eigenvalue, e.error_estimate + sp.abs_tol)
    ok = rep is not None and rep.lhs == 8.0 and rep.verdict == "holds"
    criterion(11, ok, f"λ1 = {e.eigenvalue:.6f} ≥ {rep.lhs:g} - {rep.tolerance:.2e}")
    assert ok


def test_criterion_12_cartesian_2d(criterion):
    sc = make_scenario(ConstantField(5.0), ZeroPotential(), N=2000)
    t0 = time.perf_counter()
    res = cartesian_2d_spectrum(sc, 4, 160)
    runtime = time.perf_counter() - t0
    shifted = cartesian_2d_spectrum(sc, 4, 160, gauge_shift=0.37)
    ref = assemble(sc, float(res.values[-1]) * 1.1).eigenvalues[:4]
    rel = np.abs(res.values - ref) / ref
    gauge = float(np.max(np.abs(shifted.values - res.values) / np.abs(res.values)))
    ok = bool(np.all(rel < 0.03)) and gauge < 1e-8 and runtime < 60
    criterion(12, ok, f"max rel diff {rel.max():.4f}, gauge shift {gauge:.1e}, {runtime:.1f} s")
    assert ok


def _corpus_outputs():
    records = [run_verify(sc, cache=None, spectra=None) for _, sc in corpus(1000)]
    return render(records, "csv"), render(records, "json", include_metadata=False)


def test_criterion_13_determinism(criterion):
    csv1, json1 = _corpus_outputs()
    csv2, json2 = _corpus_outputs()
    ok = csv1 == csv2 and json1 == json2
    criterion(13, ok, f"CSV {len(csv1)} B, JSON {len(json1)} B, identical={ok}")
    assert ok
