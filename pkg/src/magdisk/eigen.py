"""Sturm-sequence bisection for symmetric tridiagonal matrices.

A matrix is given by its diagonal ``d`` (length n) and off-diagonal ``e``
(length n-1). ``count_below`` is the exact inertia count from the LDLᵀ
recurrence; every eigenvalue list returned here carries that count as a
certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.linalg import solve_banded

_TINY = np.finfo(float).tiny
_EPS = np.finfo(float).eps


@numba.njit(cache=True)
def _sturm_count(d, e2, x, pivmin):
    n = d.shape[0]
    count = 0
    q = d[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        count += 1
    for i in range(1, n):
        q = d[i] - x - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
    return count


@numba.njit(cache=True)
def _bisect(d, e2, k0, k1, lo, hi, tol, pivmin):
    """Eigenvalues with indices k0..k1-1 (0-based) inside the bracket [lo, hi]."""
    out = np.empty(k1 - k0)
    left = lo
    for k in range(k0, k1):
        a = left
        b = hi
        while True:
            mid = 0.5 * (a + b)
            if b - a <= tol or mid <= a or mid >= b:
                break
            if _sturm_count(d, e2, mid, pivmin) > k:
                b = mid
            else:
                a = mid
        out[k - k0] = 0.5 * (a + b)
        left = a
    return out


def _arrays(matrix):
    if isinstance(matrix, tuple):
        d, e = matrix
    else:
        d, e = matrix.diag, matrix.offdiag
    d = np.ascontiguousarray(d, dtype=float)
    e = np.ascontiguousarray(e, dtype=float)
    if e.shape[0] != max(d.shape[0] - 1, 0):
        raise ValueError("off-diagonal must have length n - 1")
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
        raise ValueError("matrix entries must be finite")
    return d, e


def norm_inf(d, e) -> float:
    row = np.abs(d).copy()
    if e.size:
        row[:-1] += np.abs(e)
        row[1:] += np.abs(e)
    return float(row.max())


def _pivmin(d, e) -> float:
    # near-zero pivots become -tiny·max(1, ‖T‖∞²), counted as negative
    return _TINY * max(1.0, norm_inf(d, e) ** 2)


def gershgorin_bounds(matrix) -> tuple[float, float]:
    d, e = _arrays(matrix)
    r = np.zeros_like(d)
    if e.size:
        r[:-1] += np.abs(e)
        r[1:] += np.abs(e)
    return float(np.min(d - r)), float(np.max(d + r))


def count_below(matrix, x: float) -> int:
    """Number of eigenvalues strictly below ``x``."""
    d, e = _arrays(matrix)
    return int(_sturm_count(d, e * e, float(x), _pivmin(d, e)))


@dataclass
class EigenRequest:
    diag: np.ndarray
    offdiag: np.ndarray
    threshold: float
    abs_tol: float | None = None
    max_eigenvalues: int | None = None

    def tolerance(self) -> float:
        if self.abs_tol is not None:
            if not self.abs_tol > 0:
                raise ValueError("abs_tol must be positive")
            return self.abs_tol
        return 1e-10 * float(np.max(np.abs(self.diag)))


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    count_certificate: int
    complete: bool = True
    residual_norms: np.ndarray | None = field(default=None, repr=False)


def eigenvalues_below(request: EigenRequest) -> EigenResult:
    """All eigenvalues below ``request.threshold``, ascending, by bisection.

    Each eigenvalue is isolated to ``abs_tol`` (or to floating-point
    resolution of its bracket, whichever is reached first). If more than
    ``max_eigenvalues`` lie below the threshold only the lowest ones are
    returned and ``complete`` is False.
    """
    d, e = _arrays((request.diag, request.offdiag))
    tol = request.tolerance()
    e2 = e * e
    pivmin = _pivmin(d, e)
    thr = float(request.threshold)
    n_below = int(_sturm_count(d, e2, thr, pivmin))
    k1 = n_below
    complete = True
    if request.max_eigenvalues is not None and n_below > request.max_eigenvalues:
        k1 = int(request.max_eigenvalues)
        complete = False
    if k1 == 0:
        return EigenResult(np.empty(0), n_below, complete)
    lo, _ = gershgorin_bounds((d, e))
    lo -= 2 * _EPS * max(abs(lo), 1.0)
    vals = _bisect(d, e2, 0, k1, lo, thr, tol, pivmin)
    return EigenResult(np.minimum(vals, np.nextafter(thr, -np.inf)), n_below, complete)


def smallest_eigenvalues(matrix, count: int, abs_tol: float | None = None) -> np.ndarray:
    """The ``count`` lowest eigenvalues of a symmetric tridiagonal matrix."""
    d, e = _arrays(matrix)
    count = min(int(count), d.shape[0])
    if count <= 0:
        return np.empty(0)
    lo, hi = gershgorin_bounds((d, e))
    pad = 2 * _EPS * max(abs(lo), abs(hi), 1.0)
    tol = abs_tol if abs_tol is not None else 1e-10 * float(np.max(np.abs(d)))
    return _bisect(d, e * e, 0, count, lo - pad, hi + pad, tol, _pivmin(d, e))


def inverse_iteration(matrix, eigenvalue: float, iterations: int = 3, seed: int = 0):
    """Eigenvector for ``eigenvalue`` by shifted inverse iteration.

    Returns ``(vector, residual_norm)`` with a unit-norm vector and
    ``‖T v - λ v‖₂``.
    """
    d, e = _arrays(matrix)
    n = d.shape[0]
    shift = eigenvalue - 64 * _EPS * max(norm_inf(d, e), 1.0)
    ab = np.zeros((3, n))
    ab[0, 1:] = e
    ab[1] = d - shift
    ab[2, :-1] = e
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(iterations):
        v = solve_banded((1, 1), ab, v, check_finite=False)
        v /= np.linalg.norm(v)
    tv = d * v
    tv[:-1] += e * v[1:]
    tv[1:] += e * v[:-1]
    lam = float(v @ tv)
    return v, float(np.linalg.norm(tv - lam * v))
