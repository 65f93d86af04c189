import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magdisk.eigen import (
    EigenRequest,
    count_below,
    eigenvalues_below,
    gershgorin_bounds,
    inverse_iteration,
    smallest_eigenvalues,
)


def laplacian(n):
    h = 1.0 / (n + 1)
    return np.full(n, 2 / h**2), np.full(n - 1, -1 / h**2), h


def test_count_examples():
    assert count_below((np.array([2.0, 2.0]), np.array([0.0])), 1.0) == 0
    # exact zero pivot at the shift
    assert count_below((np.array([0.0, 0.0]), np.array([1.0])), 0.0) == 1


def test_discrete_laplacian_count_and_lowest():
    d, e, h = laplacian(100)
    closed = (4 / h**2) * np.sin(np.arange(1, 101) * math.pi * h / 2) ** 2
    assert count_below((d, e), math.pi**2) == int(np.sum(closed < math.pi**2)) == 1
    res = eigenvalues_below(EigenRequest(d, e, 100.0, abs_tol=1e-10))
    assert res.count_certificate == len(res.eigenvalues)
    assert res.eigenvalues[0] == pytest.approx(closed[0], abs=1e-10)


def test_default_tolerance_scales_with_diagonal():
    d, e, _ = laplacian(100)
    req = EigenRequest(d, e, 50.0)
    assert req.tolerance() == pytest.approx(1e-10 * d.max())
    with pytest.raises(ValueError):
        EigenRequest(d, e, 1.0, abs_tol=0.0).tolerance()


def test_diagonal_matrix_returns_sorted_entries():
    d = np.array([3.0, -1.0, 7.5, 0.25, 2.0])
    res = eigenvalues_below(EigenRequest(d, np.zeros(4), 5.0, abs_tol=1e-13))
    np.testing.assert_allclose(res.eigenvalues, [-1.0, 0.25, 2.0, 3.0], atol=1e-12)


def test_shift_and_scale():
    rng = np.random.default_rng(3)
    d, e = rng.normal(size=40), rng.normal(size=39)
    base = smallest_eigenvalues((d, e), 10, 1e-13)
    np.testing.assert_allclose(smallest_eigenvalues((d + 2.5, e), 10, 1e-13), base + 2.5, atol=1e-11)
    for c in (0.5, 2.0, 10.0):
        np.testing.assert_allclose(smallest_eigenvalues((c * d, c * e), 10, 1e-13), c * base, atol=1e-11 * c)


def test_random_against_dense_reference():
    rng = np.random.default_rng(11)
    for _ in range(5):
        d, e = rng.normal(size=50), rng.normal(size=49)
        dense = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        ref = np.linalg.eigvalsh(dense)
        ours = smallest_eigenvalues((d, e), 50, 1e-13)
        assert np.max(np.abs(ours - ref)) < 1e-8


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 30), seed=st.integers(0, 10**6), x=st.floats(-3, 3))
def test_count_certificate_property(n, seed, x):
    rng = np.random.default_rng(seed)
    d, e = rng.normal(size=n), rng.normal(size=n - 1)
    res = eigenvalues_below(EigenRequest(d, e, x, abs_tol=1e-12))
    assert res.count_certificate == len(res.eigenvalues) == count_below((d, e), x)
    assert np.all(res.eigenvalues < x)
    assert np.all(np.diff(res.eigenvalues) >= -1e-12)


def test_cap_flags_incomplete():
    d, e, _ = laplacian(50)
    res = eigenvalues_below(EigenRequest(d, e, 1e4, abs_tol=1e-8, max_eigenvalues=3))
    assert not res.complete and len(res.eigenvalues) == 3 and res.count_certificate > 3


def test_gershgorin_encloses_spectrum():
    rng = np.random.default_rng(5)
    d, e = rng.normal(size=20), rng.normal(size=19)
    lo, hi = gershgorin_bounds((d, e))
    ev = np.linalg.eigvalsh(np.diag(d) + np.diag(e, 1) + np.diag(e, -1))
    assert lo <= ev.min() and ev.max() <= hi


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        count_below((np.ones(3), np.ones(3)), 0.0)
    with pytest.raises(ValueError):
        count_below((np.array([1.0, np.nan]), np.ones(1)), 0.0)


def test_inverse_iteration_residual():
    d, e, h = laplacian(200)
    lam = smallest_eigenvalues((d, e), 1, 1e-12)[0]
    v, res = inverse_iteration((d, e), lam)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert res < 1e-6 * np.max(np.abs(d))
    # lowest mode is sin(πx): single sign
    assert np.all(v > 0) or np.all(v < 0)
