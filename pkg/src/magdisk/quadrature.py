"""Adaptive Simpson integration and positive-part integrals with kink handling."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

RTOL = 1e-10
ATOL = 1e-14


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature cannot reach the requested tolerance."""


def _simpson(fa, fm, fb, h):
    return h * (fa + 4.0 * fm + fb) / 6.0


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    rtol: float = RTOL,
    atol: float = ATOL,
    max_depth: int = 50,
    min_panels: int = 16,
) -> float:
    """Integrate ``f`` over ``[a, b]`` by adaptive Simpson bisection.

    The interval is first split into ``min_panels`` panels; a composite
    estimate over those panels sets the error budget
    ``max(atol, rtol * |I|)``, which is then shared among subintervals as
    they are bisected. Each accepted pair carries the usual Richardson
    correction ``(S2 - S1) / 15``.

    Raises
    ------
    QuadratureError
        If an integrand value is not finite or a subinterval still fails
        the local test at ``max_depth``.
    """
    if a == b:
        return 0.0
    if a > b:
        return -adaptive_simpson(f, b, a, rtol, atol, max_depth, min_panels)

    def ev(x):
        y = float(f(x))
        if not math.isfinite(y):
            raise QuadratureError(f"integrand is not finite at x={x!r} in [{a!r}, {b!r}]")
        return y

    edges = np.linspace(a, b, min_panels + 1)
    panels = []
    coarse = 0.0
    fl = ev(edges[0])
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        fm = ev(mid)
        fr = ev(hi)
        s = _simpson(fl, fm, fr, hi - lo)
        panels.append((lo, hi, fl, fm, fr, s))
        coarse += s
        fl = fr
    budget = max(atol, rtol * abs(coarse))

    total = 0.0
    # explicit stack: (lo, hi, f(lo), f(mid), f(hi), whole, tol, depth)
    stack = [(lo, hi, fa, fm, fb, s, budget / min_panels, 0) for lo, hi, fa, fm, fb, s in reversed(panels)]
    while stack:
        lo, hi, fa, fm, fb, whole, tol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm = ev(lm)
        frm = ev(rm)
        left = _simpson(fa, flm, fm, mid - lo)
        right = _simpson(fm, frm, fb, hi - mid)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol or (hi - lo) <= 4.0 * np.finfo(float).eps * max(abs(lo), abs(hi)):
            total += left + right + delta / 15.0
            continue
        if depth >= max_depth:
            raise QuadratureError(
                f"adaptive Simpson did not converge on subinterval [{lo!r}, {hi!r}] "
                f"(|delta|={abs(delta):.3e}, tol={tol:.3e})"
            )
        stack.append((mid, hi, fm, frm, fb, right, 0.5 * tol, depth + 1))
        stack.append((lo, mid, fa, flm, fm, left, 0.5 * tol, depth + 1))
    return total


def integrate_piecewise(f, breakpoints: Sequence[float], rtol=RTOL, atol=ATOL) -> float:
    """Sum of adaptive Simpson integrals between consecutive breakpoints."""
    pts = sorted(set(float(x) for x in breakpoints))
    return math.fsum(adaptive_simpson(f, lo, hi, rtol, atol) for lo, hi in zip(pts[:-1], pts[1:]))


def positive_intervals(g, a: float, b: float, n_scan: int = 2048, breakpoints=()) -> list[tuple[float, float]]:
    """Intervals of ``[a, b]`` on which ``g > 0``, with roots located by Brent's method.

    ``g`` must accept numpy arrays. Sign changes are bracketed on a scan grid
    that is uniform plus geometric near ``a`` (where the singular term lives),
    merged with any profile ``breakpoints``.
    """
    if b <= a:
        return []
    uniform = np.linspace(a, b, n_scan + 1)
    if a > 0:
        geometric = np.geomspace(a, b, n_scan // 4 + 1)
    else:
        geometric = np.geomspace(max(b * 1e-8, np.finfo(float).tiny), b, n_scan // 4 + 1)
    extra = [x for x in breakpoints if a < x < b]
    xs = np.unique(np.concatenate([uniform, geometric, extra]))
    xs = xs[(xs >= a) & (xs <= b)]
    gs = np.asarray(g(xs), dtype=float)
    positive = gs > 0.0

    def scalar(x):
        return float(np.asarray(g(np.array([x])))[0])

    def root(lo, hi):
        return brentq(scalar, lo, hi, xtol=1e-15 * max(1.0, abs(hi)), rtol=4 * np.finfo(float).eps)

    intervals = []
    start = a if positive[0] else None
    for i in range(1, len(xs)):
        if positive[i] and not positive[i - 1]:
            start = xs[i - 1] if gs[i - 1] == 0.0 else root(xs[i - 1], xs[i])
        elif positive[i - 1] and not positive[i]:
            end = xs[i] if gs[i] == 0.0 else root(xs[i - 1], xs[i])
            intervals.append((start, end))
            start = None
    if start is not None:
        intervals.append((start, b))
    return [(lo, hi) for lo, hi in intervals if hi > lo]


def integrate_positive_part(
    g,
    power: float,
    weight: Callable[[float], float] | None,
    a: float,
    b: float,
    breakpoints=(),
    rtol: float = RTOL,
    atol: float = ATOL,
) -> float:
    """Compute ``∫_a^b g(r)_+^power · weight(r) dr``.

    The zero set of ``g`` is bracketed first so that the adaptive rule
    never straddles a kink of ``(·)_+``.
    """
    total = []
    for lo, hi in positive_intervals(g, a, b, breakpoints=breakpoints):
        inner = [lo] + [x for x in breakpoints if lo < x < hi] + [hi]

        def f(r):
            val = float(np.asarray(g(np.array([r])))[0])
            base = max(val, 0.0) ** power
            return base * weight(r) if weight is not None else base

        total.append(integrate_piecewise(f, inner, rtol, atol))
    return math.fsum(total)
