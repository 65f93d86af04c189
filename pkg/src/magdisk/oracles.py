"""Independent reference computations used to validate the radial pipeline.

* Bessel zeros for the field-free Dirichlet disk, λ = (j_{m,k}/r0)²;
* the Landau level B0 as the deep-well limit of a constant field;
* a two-dimensional masked-grid magnetic Laplacian with Peierls phases;
* a fixed-n midpoint rule for checking adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .model import ConstantField, PowerLawBoundaryField, Scenario, gauge_a

BESSEL = "BesselZeros"
LANDAU = "LandauLimit"
CARTESIAN_2D = "Cartesian2D"
BRUTE_QUADRATURE = "BruteQuadrature"

MAX_2D_GRID = 200


class OracleError(RuntimeError):
    """An oracle could not produce a trustworthy reference value."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


@dataclass
class OracleResult:
    method: str
    values: np.ndarray
    error_estimate: float
    parameters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "values": [float(v) for v in np.ravel(self.values)],
            "error_estimate": self.error_estimate,
            "parameters": self.parameters,
        }


# ---------------------------------------------------------------------------
# Bessel functions and zeros


def _bessel_series(m: int, x: float) -> float:
    # J_m(x) = Σ_k (-1)^k (x/2)^{2k+m} / (k! (k+m)!)
    half = 0.5 * x
    term = half**m / math.factorial(m)
    total = term
    q = -half * half
    for k in range(1, 200):
        term *= q / (k * (k + m))
        total += term
        if abs(term) <= 1e-17 * abs(total):
            return total
    raise OracleError(f"J_{m} ascending series did not converge at x={x!r}")


def _bessel_miller(m: int, x: float) -> float:
    # backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalised by J_0 + 2 Σ J_{2k} = 1
    top = 2 * ((max(m, int(x)) + 20 + int(math.sqrt(40.0 * max(m, x)))) // 2)
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    result = 0.0
    for k in range(top, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            j_next *= 1e-250
            j_cur *= 1e-250
            result *= 1e-250
            norm *= 1e-250
        if k - 1 == m:
            result = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
    norm += j_cur  # J_0 term
    if m == 0:
        result = j_cur
    return result / norm


def bessel_j(m: int, x: float) -> float:
    """J_m(x) for integer m ≥ 0 and x ≥ 0."""
    m = abs(int(m))
    if x < 0:
        raise ValueError("bessel_j needs x >= 0")
    if x == 0:
        return 1.0 if m == 0 else 0.0
    if x <= 2.0:
        return _bessel_series(m, x)
    return _bessel_miller(m, x)


def mcmahon_estimate(m: int, k: int) -> float:
    """Large-k asymptotic estimate of the k-th positive zero of J_m."""
    b = (k + 0.5 * m - 0.25) * math.pi
    mu = 4.0 * m * m
    return b - (mu - 1) / (8 * b) - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * b) ** 3)


def bessel_zeros(m: int, count: int, xtol: float = 1e-14) -> np.ndarray:
    """First ``count`` positive zeros of J_m by sign-change scan plus bisection."""
    m = abs(int(m))
    if count < 1:
        raise ValueError("count must be >= 1")
    step = 0.05
    x = max(float(m), step)
    limit = mcmahon_estimate(m, count) + 2 * math.pi + 2.0 * m
    fx = bessel_j(m, x)
    zeros = []
    while len(zeros) < count:
        if x > limit:
            raise OracleError(f"found only {len(zeros)} zeros of J_{m} below {limit!r}")
        y = x + step
        fy = bessel_j(m, y)
        if fx == 0.0:
            zeros.append(x)
        elif fx * fy < 0:
            a, b, fa = x, y, fx
            while b - a > xtol * max(1.0, b):
                c = 0.5 * (a + b)
                fc = bessel_j(m, c)
                if fc == 0.0:
                    a = b = c
                    break
                if (fc < 0) == (fa < 0):
                    a, fa = c, fc
                else:
                    b = c
            zeros.append(0.5 * (a + b))
        x, fx = y, fy
    return np.array(zeros[:count])


def bessel_dirichlet_spectrum(r0: float, m_max: int, count: int) -> OracleResult:
    """(j_{m,k}/r0)² for 0 ≤ m ≤ m_max and 1 ≤ k ≤ count; row m, column k-1."""
    if m_max < 0 or count < 1:
        raise ValueError("need m_max >= 0 and count >= 1")
    zeros = np.array([bessel_zeros(m, count) for m in range(m_max + 1)])
    values = (zeros / r0) ** 2
    # bisection width 1e-14 relative, J_m evaluation to ~1e-15
    err = float(np.max(values)) * 1e-13
    return OracleResult(BESSEL, values, err, {"r0": r0, "m_max": m_max, "count": count, "zeros": zeros.tolist()})


def bessel_sorted_spectrum(r0: float, threshold: float) -> list[tuple[float, int, int]]:
    """All (λ, m, k) with λ = (j_{|m|,k}/r0)² ≤ threshold, m ∈ Z, sorted ascending."""
    out = []
    m = 0
    while (bessel_zeros(m, 1)[0] / r0) ** 2 <= threshold:
        k = 1
        while True:
            lam = (bessel_zeros(m, k)[-1] / r0) ** 2
            if lam > threshold:
                break
            out += [(lam, m, k)] if m == 0 else [(lam, -m, k), (lam, m, k)]
            k += 1
        m += 1
    return sorted(out)


# ---------------------------------------------------------------------------
# Landau level


def landau_limit_check(B0: float, r0: float, lambda1: float | None = None) -> OracleResult:
    """Landau level B0 as reference for the constant-field ground state.

    Valid in the deep-well regime r0·√B0 ≥ 6, where the Dirichlet boundary
    lifts the ground state above B0 only by a term of order exp(-B0 r0²/4).
    """
    if not B0 > 0:
        raise ValueError("Landau limit needs B0 > 0")
    if r0 * math.sqrt(B0) < 6:
        raise ValueError(f"Landau limit needs r0·√B0 ≥ 6 (got {r0 * math.sqrt(B0):.6g})")
    delta = max(math.exp(-B0 * r0 * r0 / 4), np.finfo(float).eps)
    params = {"B0": B0, "r0": r0, "lower": B0, "upper": B0 * (1 + delta), "delta": delta}
    if lambda1 is not None:
        params["lambda1"] = lambda1
        params["ratio"] = lambda1 / B0
    return OracleResult(LANDAU, np.array([B0]), B0 * delta, params)


# ---------------------------------------------------------------------------
# 2D masked-grid magnetic Laplacian

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)


def _edge_phase(fld, x0, y0, dx, dy, h):
    """∫ A·dl along the segment (x0, y0) → (x0 + dx·h, y0 + dy·h), A = (a/r)(-y, x)."""
    total = np.zeros_like(x0)
    for t, w in zip(_GL_NODES, _GL_WEIGHTS):
        s = 0.5 * (t + 1.0)
        x = x0 + dx * h * s
        y = y0 + dy * h * s
        r = np.hypot(x, y)
        a = np.asarray(gauge_a(fld, r), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ar = np.where(r > 0, a / np.where(r > 0, r, 1.0), 0.0)
        if isinstance(fld, ConstantField):
            ar = np.full_like(r, 0.5 * fld.B0)
        total += 0.5 * w * ar * (-y * dx + x * dy) * h
    return total


def cartesian_2d_operator(scenario: Scenario, n: int, gauge_shift: float = 0.0):
    """Five-point magnetic Laplacian minus V on the grid points strictly inside the disk.

    The square [-r0, r0]² carries n×n interior points with spacing
    h = 2r0/(n+1). Each edge gets the Peierls factor exp(-i∫A·dl); the
    optional ``gauge_shift`` c adds ∇(c·x) to A. Returns ``(H, info)``,
    with H assembled so that H equals its conjugate transpose exactly.
    """
    if n > MAX_2D_GRID:
        raise ValueError(f"2D oracle grid is limited to {MAX_2D_GRID}×{MAX_2D_GRID}")
    if isinstance(scenario.field, PowerLawBoundaryField) and scenario.field.c > 0:
        raise ValueError("2D oracle supports bounded fields only")
    r0 = scenario.r0
    h = 2 * r0 / (n + 1)
    xs = -r0 + h * np.arange(1, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    inside = X**2 + Y**2 < r0**2
    idx = -np.ones((n, n), dtype=np.int64)
    size = int(inside.sum())
    idx[inside] = np.arange(size)

    rows, cols, vals = [], [], []
    for di, dj in ((1, 0), (0, 1)):
        a = idx[: n - di, : n - dj]
        b = idx[di:, dj:]
        ok = (a >= 0) & (b >= 0)
        x0 = X[: n - di, : n - dj][ok]
        y0 = Y[: n - di, : n - dj][ok]
        theta = _edge_phase(scenario.field, x0, y0, di, dj, h)
        if di:
            theta = theta + gauge_shift * h
        hop = -np.exp(-1j * theta) / h**2
        rows += [a[ok], b[ok]]
        cols += [b[ok], a[ok]]
        vals += [hop, np.conj(hop)]
    r = np.hypot(X[inside], Y[inside])
    diag = 4.0 / h**2 - np.asarray(scenario.potential(r), dtype=float)
    H = sp.csr_matrix(
        (np.concatenate(vals + [diag.astype(complex)]),
         (np.concatenate(rows + [np.arange(size)]), np.concatenate(cols + [np.arange(size)]))),
        shape=(size, size),
    )
    return H, {"n": n, "h": h, "points": size, "gauge_shift": gauge_shift}


def lowest_hermitian_eigenvalues(H, count: int, shift: float, block: int | None = None,
                                 rtol: float = 1e-9, max_iter: int = 400, seed: int = 0):
    """Lowest ``count`` eigenvalues of a sparse Hermitian H above ``shift``.

    Block inverse iteration with a fixed LU factorization of H - shift·I and
    Rayleigh-Ritz after each step; converged Ritz vectors are locked (kept
    in the block but no longer tested). Returns ``(values, residuals, iterations)``.
    """
    size = H.shape[0]
    block = min(size, block or count + 4)
    lu = splu((H - shift * sp.identity(size, format="csc")).tocsc())
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((size, block)) + 1j * rng.standard_normal((size, block))
    V, _ = np.linalg.qr(V)
    scale = max(1.0, float(abs(H).sum(axis=1).max()))
    history = []
    locked = 0
    for it in range(1, max_iter + 1):
        W = lu.solve(V)
        W, _ = np.linalg.qr(W)
        HW = H @ W
        small = W.conj().T @ HW
        theta, S = np.linalg.eigh(0.5 * (small + small.conj().T))
        V = W @ S
        HV = HW @ S
        res = np.linalg.norm(HV - V * theta, axis=0)
        history.append(float(np.max(res[:count])))
        ok = res[:count] <= rtol * scale
        while locked < count and ok[locked]:
            locked += 1
        if locked == count:
            return theta[:count].copy(), res[:count].copy(), it
    raise OracleError(
        f"inverse iteration did not converge in {max_iter} steps (last residual {history[-1]:.3e})", history
    )


def cartesian_2d_spectrum(scenario: Scenario, count: int = 4, n: int | None = None,
                          gauge_shift: float = 0.0) -> OracleResult:
    """Lowest eigenvalues of the 2D masked-grid Peierls discretization."""
    n = int(n or scenario.numerics.oracle_2d_grid)
    H, info = cartesian_2d_operator(scenario, n, gauge_shift)
    shift = -scenario.potential.sup_norm(scenario.r0) - 1.0
    values, residuals, iterations = lowest_hermitian_eigenvalues(H, count, shift)
    # O(h²) interior error plus O(h) from the staircase boundary
    err = float(np.max(np.abs(values))) * info["h"] / scenario.r0
    info.update({"iterations": iterations, "residuals": residuals.tolist(), "shift": shift})
    return OracleResult(CARTESIAN_2D, values, err, info)


# ---------------------------------------------------------------------------
# brute-force quadrature


def brute_quadrature(f, a: float, b: float, n: int = 10**6) -> float:
    """Composite midpoint rule with n cells; ``f`` must accept numpy arrays."""
    h = (b - a) / n
    x = a + h * (np.arange(n) + 0.5)
    return float(math.fsum(np.asarray(f(x), dtype=float)) * h)
