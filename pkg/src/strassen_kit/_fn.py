"""Deterministic time functions: polynomials (exact calculus) or plain callables.

The built-in process families use ``numpy.polynomial.Polynomial`` for the
diffusion schedule, the jump time weight and the jump scale, which keeps every
integral in closed form.  Arbitrary callables are accepted as well and fall back
to adaptive quadrature (``scipy.integrate.quad``) or fixed Gauss-Legendre rules
where many small integrals are needed at once.
"""

from __future__ import annotations

import math
from typing import Callable, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, optimize

TimeFn = Union[Polynomial, Callable[[np.ndarray], np.ndarray]]

QUAD_EPSABS = 1e-10
QUAD_LIMIT = 400

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class DivergenceError(ArithmeticError):
    """An integral of the characteristics is not finite."""


def as_timefn(fn) -> TimeFn | None:
    if fn is None:
        return None
    if isinstance(fn, Polynomial):
        return fn
    if isinstance(fn, (int, float, np.floating, np.integer)):
        return Polynomial([float(fn)])
    if isinstance(fn, (list, tuple)):
        return Polynomial([float(c) for c in fn])
    if callable(fn):
        return fn
    raise TypeError(f"cannot interpret {fn!r} as a time function")


def is_poly(fn) -> bool:
    return isinstance(fn, Polynomial)


def is_constant(fn) -> bool:
    return is_poly(fn) and fn.trim().degree() == 0


def integrate_fn(fn: TimeFn, s: float, t: float) -> float:
    """Integral of ``fn`` over ``[s, t]``; closed form for polynomials."""
    if t <= s:
        return 0.0
    if is_poly(fn):
        P = fn.integ()
        return float(P(t) - P(s))
    if math.isinf(t):
        raise DivergenceError("integration to infinity requested")
    out = integrate.quad(lambda r: float(fn(r)), s, t, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=QUAD_LIMIT,
                         full_output=1)
    val = out[0]
    if _divergence_flagged(out):
        raise DivergenceError(f"integral over [{s}, {t}] appears divergent")
    if not math.isfinite(val):
        raise DivergenceError(f"integral over [{s}, {t}] is not finite")
    return float(val)


def _divergence_flagged(out) -> bool:
    # full_output gives (y, abserr, infodict) on success, (y, abserr, infodict, message, ...) otherwise
    return len(out) >= 4 and "divergent" in str(out[3]).lower()


def product(f: TimeFn, g: TimeFn) -> TimeFn:
    if is_poly(f) and is_poly(g):
        return f * g
    return lambda r: np.asarray(f(r), dtype=float) * np.asarray(g(r), dtype=float)


def gl_integrals(fn: TimeFn, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Vectorised integrals over many small windows ``[lo_k, hi_k]``.

    Exact antiderivative differences for polynomials, a 16-point Gauss-Legendre
    rule per window otherwise.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if is_poly(fn):
        P = fn.integ()
        return np.where(hi > lo, P(hi) - P(lo), 0.0)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[..., None] + half[..., None] * _GL_NODES
    vals = np.asarray(fn(pts), dtype=float)
    out = half * (vals @ _GL_WEIGHTS)
    return np.where(hi > lo, out, 0.0)


def sup_abs(fn: TimeFn | None, s: float, t: float, scan: int = 4097) -> float:
    """``sup |fn|`` on ``[s, t]``.

    Exact for polynomials (endpoints plus critical points).  Callables get a
    dense scan refined by a bounded scalar search around the best scan point.
    ``None`` stands for the constant 1.
    """
    if fn is None:
        return 1.0
    if t < s:
        raise ValueError("require s <= t")
    if is_poly(fn):
        if math.isinf(t):
            return abs(float(fn(s))) if fn.trim().degree() == 0 else math.inf
        cands = [s, t]
        d = fn.deriv()
        if d.degree() >= 1 or np.any(d.coef != 0):
            for root in np.atleast_1d(d.roots()):
                if abs(root.imag) < 1e-12 and s < root.real < t:
                    cands.append(root.real)
        return float(np.max(np.abs(fn(np.array(cands)))))
    if math.isinf(t):
        return math.inf
    grid = np.linspace(s, t, scan)
    vals = np.abs(np.asarray(fn(grid), dtype=float))
    if not np.all(np.isfinite(vals)):
        return math.inf
    k = int(np.argmax(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, scan - 1)]
    if b > a:
        res = optimize.minimize_scalar(lambda r: -abs(float(fn(r))), bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-12 * max(1.0, abs(b))})
        return float(max(vals[k], -res.fun))
    return float(vals[k])


def first_crossing(fn: TimeFn, level: float, cap: float = 1e300) -> float:
    """``inf{r >= 0 : fn(r) >= level}`` for a nondecreasing ``fn`` (``inf`` if never)."""
    if float(fn(0.0)) >= level:
        return 0.0
    hi = 1.0
    while float(fn(hi)) < level:
        hi *= 2.0
        if hi > cap:
            return math.inf
    lo = 0.0 if hi == 1.0 else hi / 2.0
    return float(optimize.brentq(lambda r: float(fn(r)) - level, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))


def invert_cumulative(fn: TimeFn, lo: np.ndarray, hi: np.ndarray, frac: np.ndarray, iters: int = 80) -> np.ndarray:
    """Solve ``int_lo^x fn = frac * int_lo^hi fn`` for ``x`` in ``[lo, hi]`` (vectorised bisection).

    ``fn`` must be nonnegative on each window so the cumulative is monotone.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    total = gl_integrals(fn, lo, hi)
    target = frac * total
    a = lo.copy()
    b = hi.copy()
    for _ in range(iters):
        m = 0.5 * (a + b)
        below = gl_integrals(fn, lo, m) < target
        a = np.where(below, m, a)
        b = np.where(below, b, m)
        if np.all(b - a <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(b))):
            break
    return 0.5 * (a + b)
