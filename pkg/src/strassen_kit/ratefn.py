"""The quadratic path rate function, its variational dual and sublevel-set geometry.

For ``f`` absolutely continuous with ``f(0) = 0``

    I(f) = 1 / (2 sigma2 gamma) * int_0^1 f'(s)^2 s^(1 - gamma) ds

and ``I = inf`` otherwise.  On a knot grid ``0 = t_0 < ... < t_n = 1`` write
``tau_j = t_j^gamma`` and ``D_j = tau_{j+1} - tau_j``.  The discrete dual

    J_n(f) = 1 / (2 sigma2) * sum_j (f_{j+1} - f_j)^2 / D_j

is the supremum of ``int f d(alpha) - Lambda(alpha)`` over step functions
aligned with the grid.  ``J_n(f)`` equals ``I`` of the interpolant that is
linear in ``tau`` between knots, which is the smallest ``I`` among all
functions with the given knot values; this is what makes the box-constrained
problems below exact infima of ``I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampler import GridFunction

__all__ = [
    "RateParams",
    "StepFunction",
    "SublevelSet",
    "ConvergenceError",
    "rate_I",
    "rate_J_discrete",
    "endpoint_witness",
    "lambda_functional",
    "dual_objective",
    "inf_rate_over_ball",
    "sublevel_project",
    "distance_to_sublevel",
    "modulus_bound",
    "sublevel_ball_infima",
]


class ConvergenceError(ArithmeticError):
    """An iterative solver hit its iteration cap."""


@dataclass(frozen=True)
class RateParams:
    gamma: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be > 0")


@dataclass
class StepFunction:
    """Right-continuous step function ``beta`` on ``[0, 1]`` with ``beta(1) = 0``.

    ``levels[j]`` is the value on ``[breakpoints[j], breakpoints[j + 1])``.
    In terms of the dual variable ``alpha`` this is ``beta(s) = alpha(1) - alpha(s)``.
    """

    breakpoints: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        self.levels = np.asarray(self.levels, dtype=float)
        if len(self.breakpoints) != len(self.levels) + 1:
            raise ValueError("need one more breakpoint than levels")
        if self.breakpoints[0] != 0.0 or self.breakpoints[-1] != 1.0 or np.any(np.diff(self.breakpoints) <= 0):
            raise ValueError("breakpoints must increase strictly from 0 to 1")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.searchsorted(self.breakpoints, s, side="right") - 1
        out = np.where(s >= 1.0, 0.0, self.levels[np.clip(idx, 0, len(self.levels) - 1)])
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SublevelSet:
    """``{f : I(f) <= level}``."""

    level: float
    params: RateParams

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be >= 0")

    def __contains__(self, f: GridFunction) -> bool:
        return rate_I(f, self.params) <= self.level


def _tau_increments(knots: np.ndarray, gamma: float) -> np.ndarray:
    tau = knots**gamma
    return np.diff(tau)


def _segment_weights(knots: np.ndarray, gamma: float) -> np.ndarray:
    """``int_{t_j}^{t_{j+1}} s^(1 - gamma) ds`` per segment (``inf`` where divergent)."""
    a, b = knots[:-1], knots[1:]
    if gamma == 1.0:
        return b - a
    if gamma == 2.0:
        with np.errstate(divide="ignore"):
            return np.where(a > 0, np.log(b / np.where(a > 0, a, 1.0)), np.inf)
    e = 2.0 - gamma
    with np.errstate(divide="ignore"):
        return (b**e - a**e) / e if e > 0 else np.where(a > 0, (b**e - a**e) / e, np.inf)


def rate_I(f: GridFunction, params: RateParams) -> float:
    """Exact ``I`` of the piecewise-linear ``f``.

    Per segment the integrand is ``m_j^2 s^(1 - gamma)``; the segment integrals
    are closed form.  For ``gamma >= 2`` a nonzero first slope gives ``inf``.
    """
    g = params.gamma
    dt = np.diff(f.knots)
    df = np.diff(f.values)
    w = _segment_weights(f.knots, g)
    D = _tau_increments(f.knots, g)
    terms = np.empty_like(df)
    for j in range(len(df)):
        if df[j] == 0.0:
            terms[j] = 0.0
        elif not math.isfinite(w[j]):
            return math.inf
        else:
            # ratio >= 1 by Cauchy-Schwarz on the segment; clamp rounding only
            ratio = 1.0 if g == 1.0 else max(w[j] * D[j] / (g * dt[j] * dt[j]), 1.0)
            terms[j] = df[j] * df[j] / D[j] * ratio
    return math.fsum(terms) / (2.0 * params.sigma2)


def rate_J_discrete(f: GridFunction, params: RateParams) -> tuple[float, StepFunction]:
    """Discrete dual ``J_n(f)`` on the knots of ``f`` and its maximiser.

    The objective ``sum_j beta_j (f_{j+1} - f_j) - sigma2/2 * beta_j^2 D_j`` is
    separable; its optimum is ``beta_j = (f_{j+1} - f_j) / (sigma2 D_j)``.
    """
    if f.knots[1] <= 0.0:
        raise ValueError("first knot interval is degenerate")
    D = _tau_increments(f.knots, params.gamma)
    df = np.diff(f.values)
    beta = df / (params.sigma2 * D)
    value = math.fsum(df * df / D) / (2.0 * params.sigma2)
    return value, StepFunction(f.knots, beta)


def lambda_functional(beta: StepFunction, params: RateParams) -> float:
    """``gamma sigma2 / 2 * int_0^1 s^(gamma - 1) beta(s)^2 ds``, exact per piece."""
    D = _tau_increments(beta.breakpoints, params.gamma)
    return 0.5 * params.sigma2 * math.fsum(beta.levels**2 * D)


def dual_objective(f: GridFunction, beta: StepFunction, params: RateParams) -> float:
    """``int f d(alpha) - Lambda(alpha)`` for ``beta = alpha(1) - alpha``.

    ``beta`` may live on any breakpoints; the pairing ``int f d(alpha)`` is the
    Abel sum ``sum_j beta_j (f(u_{j+1}) - f(u_j))``.
    """
    u = beta.breakpoints
    df = np.diff(f(u))
    return math.fsum(beta.levels * df) - lambda_functional(beta, params)


def endpoint_witness(f: GridFunction, params: RateParams) -> tuple[float, StepFunction]:
    """Right-endpoint-weighted witness on a uniform grid.

    Uses ``beta_j = n (n / (j+1))^(gamma - 1) (f_{j+1} - f_j) / (sigma2 gamma)``,
    the classical recovery sequence.  Its objective value is a lower bound for
    ``J_n(f)`` that tends to ``I(f)`` as the grid is refined.
    """
    n = f.n
    if not np.allclose(f.knots, np.linspace(0.0, 1.0, n + 1), rtol=0, atol=1e-14):
        raise ValueError("the witness is defined on the uniform grid")
    j = np.arange(n)
    df = np.diff(f.values)
    beta = n * (n / (j + 1.0)) ** (params.gamma - 1.0) * df / (params.sigma2 * params.gamma)
    step = StepFunction(f.knots, beta)
    return dual_objective(f, step, params), step


# --------------------------------------------------------------------------- box-constrained infimum


def _qp_value(g: np.ndarray, D: np.ndarray, sigma2: float) -> float:
    d = np.diff(g)
    return math.fsum(d * d / D) / (2.0 * sigma2)


def _cd_solve(lo: np.ndarray, hi: np.ndarray, D: np.ndarray, g: np.ndarray, tol: float, max_sweeps: int):
    """Projected coordinate descent for ``min sum (g_{j+1}-g_j)^2 / D_j`` with ``g_0 = 0`` and box bounds.

    Coordinates are updated in two fixed colour classes (odd indices, then
    even), each update being the exact clipped 1-d minimiser; coordinates of one
    class do not interact, so a class is updated at once.
    """
    n = len(D)
    inv = 1.0 / D
    w_left = np.empty(n + 1)
    w_right = np.empty(n + 1)
    w_left[1:] = inv
    w_right[:-1] = inv
    w_left[0] = w_right[-1] = 0.0
    odd = np.arange(1, n + 1, 2)
    even = np.arange(2, n + 1, 2)
    scale = max(1.0, float(np.max(np.abs(hi))), float(np.max(np.abs(lo))))
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for idx in (odd, even):
            if len(idx) == 0:
                continue
            left = g[idx - 1]
            right = g[np.minimum(idx + 1, n)]
            wl, wr = w_left[idx], w_right[idx]
            target = (wl * left + wr * right) / (wl + wr)
            new = np.clip(target, lo[idx], hi[idx])
            change = max(change, float(np.max(np.abs(new - g[idx]))))
            g[idx] = new
        if change <= tol * scale:
            return g, sweep
    raise ConvergenceError(f"coordinate descent did not converge within {max_sweeps} sweeps")


def _coarse_start(knots, lo, hi, gamma, tol, max_sweeps):
    """Initial point from the same problem on every other knot (recursively)."""
    n = len(knots) - 1
    if n <= 32:
        return np.clip(np.zeros(n + 1), lo, hi)
    keep = np.unique(np.concatenate([np.arange(0, n + 1, 2), [n]]))
    kc = knots[keep]
    gc = _coarse_start(kc, lo[keep], hi[keep], gamma, tol, max_sweeps)
    gc, _ = _cd_solve(lo[keep], hi[keep], np.diff(kc**gamma), gc, tol, max_sweeps)
    return np.clip(np.interp(knots**gamma, kc**gamma, gc), lo, hi)


def _taut_string(tau: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Shortest path from ``(tau_0, lo_0 = hi_0)`` to ``(tau_N, lo_N = hi_N)`` through vertical gates.

    String pulling: from the current apex keep the tightest upper and lower
    slopes; when they cross, the path bends at the gate endpoint that bounded
    the crossed side.  The result minimises every separable convex energy
    ``sum D_j phi(slope_j)``, in particular the quadratic one.
    """
    N = len(tau) - 1
    g = np.empty(N + 1)
    apex = 0
    g[0] = lo[0]
    while apex < N:
        ta, ga = tau[apex], g[apex]
        lo_slope, hi_slope = -math.inf, math.inf
        lo_idx = hi_idx = apex
        j = apex + 1
        bend = None
        while j <= N:
            dt = tau[j] - ta
            sl = (lo[j] - ga) / dt
            su = (hi[j] - ga) / dt
            if sl > hi_slope:
                bend = (hi_idx, hi[hi_idx])
                break
            if su < lo_slope:
                bend = (lo_idx, lo[lo_idx])
                break
            if sl >= lo_slope:
                lo_slope, lo_idx = sl, j
            if su <= hi_slope:
                hi_slope, hi_idx = su, j
            j += 1
        if bend is None:
            # straight segment to the end: slope is pinned by the final gate
            slope = lo_slope if lo_idx == N else hi_slope
            g[apex + 1:] = ga + slope * (tau[apex + 1:] - ta)
            break
        k, val = bend
        slope = (val - ga) / (tau[k] - ta)
        g[apex + 1:k] = ga + slope * (tau[apex + 1:k] - ta)
        g[k] = val
        apex = k
    return g


def _taut_solve(tau, lo, hi):
    # free right end: mirror the tube about tau_n and pin both ends at 0
    n = len(tau) - 1
    T = tau[-1]
    tau2 = np.concatenate([tau, 2 * T - tau[-2::-1]])
    lo2 = np.concatenate([lo, lo[-2::-1]])
    hi2 = np.concatenate([hi, hi[-2::-1]])
    lo2[0] = hi2[0] = lo2[-1] = hi2[-1] = 0.0
    g2 = _taut_string(tau2, lo2, hi2)
    return np.clip(g2[: n + 1], lo, hi)


def inf_rate_over_ball(
    f: GridFunction,
    delta: float,
    params: RateParams,
    method: str = "cd",
    tol: float = 1e-13,
    max_sweeps: int = 10**6,
) -> tuple[float, GridFunction]:
    """Minimum of ``I`` over ``{g : |g(t_j) - f(t_j)| <= delta at every knot}``.

    Parameters
    ----------
    method : {"cd", "taut"}
        ``"cd"``: projected cyclic coordinate descent (warm-started from the
        same problem on a coarser knot set); ``tol`` bounds the largest
        coordinate change in the final sweep relative to the data scale.
        ``"taut"``: exact taut-string construction in the ``tau = s^gamma``
        coordinate.

    Returns
    -------
    inf : float
        ``(1 / (2 sigma2)) sum_j (g_{j+1} - g_j)^2 / D_j`` at the minimiser; this
        is ``I`` of the minimiser's ``tau``-linear interpolant.
    argmin : GridFunction
        Knot values of the unique minimiser.
    """
    if not delta > 0:
        raise ValueError("delta must be > 0")
    knots = f.knots
    lo = f.values - delta
    hi = f.values + delta
    lo[0] = hi[0] = 0.0
    D = _tau_increments(knots, params.gamma)
    if method == "cd":
        g0 = _coarse_start(knots, lo, hi, params.gamma, tol, max_sweeps)
        g, _ = _cd_solve(lo, hi, D, g0, tol, max_sweeps)
    elif method == "taut":
        g = _taut_solve(knots**params.gamma, lo, hi)
    else:
        raise ValueError(f"unknown method {method!r}")
    g[0] = 0.0
    return _qp_value(g, D, params.sigma2), GridFunction(g, knots.copy())


# --------------------------------------------------------------------------- sublevel sets


def _mollify(f: GridFunction, params: RateParams) -> tuple[GridFunction, float]:
    """Finite-``I`` version of ``f`` on the same knots and its sup-gap.

    Only a nonzero first slope with ``gamma >= 2`` makes a piecewise-linear
    function infinite; flattening the first segment fixes that.
    """
    if math.isfinite(rate_I(f, params)):
        return f, 0.0
    vals = f.values.copy()
    gap = abs(vals[1])
    vals[1] = 0.0
    return GridFunction(vals, f.knots), gap


def sublevel_project(f: GridFunction, r: float, params: RateParams) -> tuple[GridFunction, float]:
    """Scale ``f`` into ``Phi(r)``: ``g = c f`` with ``c = min(1, sqrt(r / I(f)))``.

    Returns ``g`` and ``dist_bound = (1 - c) sup|f| (+ mollification gap)``, an
    upper bound on the sup-distance from ``f`` to ``Phi(r)``.
    """
    if not r > 0:
        raise ValueError("r must be > 0")
    m, gap = _mollify(f, params)
    I = rate_I(m, params)
    c = 1.0 if I <= r else math.sqrt(r / I)
    g = m * c
    # I(c m) = c^2 I(m) <= r up to rounding; shave one ulp if needed
    while c > 0 and rate_I(g, params) > r:
        c = np.nextafter(c, 0.0)
        g = m * c
    return g, (1.0 - c) * m.sup_norm() + gap


def _tau_interp_excess(knots: np.ndarray, gamma: float) -> np.ndarray:
    """Per segment ``max_s |(s^g - a^g)/(b^g - a^g) - (s - a)/(b - a)|``."""
    if gamma == 1.0:
        return np.zeros(len(knots) - 1)
    a, b = knots[:-1], knots[1:]
    D = b**gamma - a**gamma
    s_star = (D / (gamma * (b - a))) ** (1.0 / (gamma - 1.0))
    s_star = np.clip(s_star, a, b)
    return np.abs((s_star**gamma - a**gamma) / D - (s_star - a) / (b - a))


def distance_to_sublevel(f: GridFunction, r: float, params: RateParams, rtol: float = 1e-6) -> tuple[float, GridFunction]:
    """Upper bound on the sup-distance from ``f`` to ``Phi(r)`` via the tube problem.

    Bisects on ``delta`` for the smallest tube around ``f`` whose minimum-``I``
    member has ``I <= r``.  The witness ``g`` (``tau``-linear between knots)
    lies in ``Phi(r)``; the returned bound is ``sup |f - g|`` including the
    gap between the ``s``-linear and ``tau``-linear interpolants.
    """
    if not r > 0:
        raise ValueError("r must be > 0")
    if rate_I(f, params) <= r:
        return 0.0, f
    g_scaled, hi = sublevel_project(f, r, params)
    lo = 0.0
    best = g_scaled
    excess = _tau_interp_excess(f.knots, params.gamma)

    def bound_for(g):
        return float(np.max(np.abs(g.values - f.values)) + np.max(np.abs(np.diff(g.values)) * excess, initial=0.0))

    best_bound = hi
    while hi - lo > rtol * max(hi, 1e-12):
        mid = 0.5 * (lo + hi)
        val, g = inf_rate_over_ball(f, mid, params, method="taut")
        if val <= r:
            hi = mid
            b = bound_for(g)
            if b < best_bound:
                best_bound, best = b, g
        else:
            lo = mid
    return best_bound, best


def modulus_bound(r: float, params: RateParams, s: float, t: float) -> float:
    """``sqrt(2 r sigma2 (t^gamma - s^gamma))``: uniform increment bound on ``Phi(r)``."""
    if not (0.0 <= s <= t <= 1.0):
        raise ValueError("require 0 <= s <= t <= 1")
    return math.sqrt(2.0 * r * params.sigma2 * (t**params.gamma - s**params.gamma))


def sublevel_ball_infima(c: float, q: float, params: RateParams) -> tuple[float, float, float]:
    """Infima of ``I`` over the endpoint, supremum and oscillation sets at level ``c``.

    Returns ``(endpoint, sup_set, osc_lower_bound)``: the first two are exact
    (attained by ``c s^gamma``); the third is only a lower bound.
    """
    if not c > 0:
        raise ValueError("c must be > 0")
    if not q > 1:
        raise ValueError("q must be > 1")
    base = c * c / (2.0 * params.sigma2)
    qg = q**params.gamma
    return base, base, base * qg / (qg - 1.0)
