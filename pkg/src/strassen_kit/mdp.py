"""Tail probabilities of scaled paths and their speed-normalised log rates.

Events are stated for the scaled path ``X^t(s) = X(t s) / S(t)`` on
``s in [0, 1]``.  Three estimators are offered:

* ``direct``: indicator Monte Carlo;
* ``tilted``: importance sampling of the terminal value under the exponential
  tilt that moves its mean to ``c S(t)`` (endpoint events only);
* ``exact``: Gaussian closed forms for pure-diffusion specs.

The empirical rate of a probability ``p`` is ``log(p) / a_t`` with speed
``a_t = S(t)^2 / h(t)`` (``h(t) = t^gamma`` unless the scaling carries its own
variance scale).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special, stats

from .characteristics import (
    DomainError,
    ProcessSpec,
    SaturationError,
    ScalingFn,
    cumulant,
    cumulant_derivative,
    variance,
)
from .ratefn import RateParams, inf_rate_over_ball, sublevel_ball_infima
from .sampler import GridFunction, PathPlan, _run_replicates, mc_terminal_values, replicate_rng

__all__ = [
    "EventSpec",
    "TailEstimate",
    "tilt_parameter",
    "tail_probability",
    "rate_gap",
    "brownian_sup_tail",
    "report_json",
]

Z95 = float(stats.norm.ppf(0.975))


@dataclass(frozen=True)
class EventSpec:
    """A path event for the scaled process.

    ``endpoint``: ``g(1) >= c``; ``sup``: ``max_s |g(s)| >= c``; ``ball``:
    ``max_s |g(s) - f(s)| <= delta``.  Path functionals are evaluated on the
    knots ``s = j/m``.
    """

    kind: str
    c: float | None = None
    f: GridFunction | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.kind == "endpoint":
            if self.c is None or not self.c >= 0:
                raise ValueError("endpoint event needs c >= 0")
        elif self.kind == "sup":
            if self.c is None or not self.c > 0:
                raise ValueError("sup event needs c > 0")
        elif self.kind == "ball":
            if self.f is None or self.delta is None or not self.delta > 0:
                raise ValueError("ball event needs a centre f and delta > 0")
        else:
            raise ValueError(f"unknown event kind {self.kind!r}")

    @classmethod
    def endpoint(cls, c: float) -> "EventSpec":
        return cls("endpoint", c=float(c))

    @classmethod
    def sup(cls, c: float) -> "EventSpec":
        return cls("sup", c=float(c))

    @classmethod
    def ball(cls, f: GridFunction, delta: float) -> "EventSpec":
        return cls("ball", f=f, delta=float(delta))

    def indicator(self, knots_values: np.ndarray) -> np.ndarray:
        """Event indicator for scaled knot values (rows are replicates)."""
        v = np.atleast_2d(knots_values)
        if self.kind == "endpoint":
            return v[:, -1] >= self.c
        if self.kind == "sup":
            return np.max(np.abs(v), axis=1) >= self.c
        centre = self.f(np.linspace(0.0, 1.0, v.shape[1]))
        return np.max(np.abs(v - centre), axis=1) <= self.delta

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.c is not None:
            d["c"] = self.c
        if self.delta is not None:
            d["delta"] = self.delta
            d["f_knots"] = self.f.knots.tolist()
            d["f_values"] = self.f.values.tolist()
        return d


@dataclass
class TailEstimate:
    probability: float
    ci_low: float
    ci_high: float
    method: str
    n_reps: int
    empirical_rate: float | None
    log_probability: float
    se: float | None = None
    ess: float | None = None
    mean_weight: float | None = None
    mean_weight_se: float | None = None
    t: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if not (self.ci_low <= self.probability <= self.ci_high):
            raise ValueError("confidence interval does not contain the estimate")


def tilt_parameter(spec: ProcessSpec, t: float, target: float, tol: float = 1e-10, max_iter: int = 200) -> float:
    """Solve ``d/dlam cumulant(spec, lam, 0, t) = target``.

    Newton steps are accepted while they stay inside the current bracket;
    otherwise the bracket is bisected.  ``Lambda'`` is nondecreasing, so the
    bracket is found by doubling.
    """
    def d1(lam):
        return cumulant_derivative(spec, lam, 0.0, t, 1)

    scale = tol * max(1.0, abs(target))
    f0 = d1(0.0) - target
    if abs(f0) <= scale:
        return 0.0
    sign = 1.0 if f0 < 0 else -1.0
    lo, hi = 0.0, sign
    while True:
        try:
            fh = d1(hi) - target
        except SaturationError as exc:
            raise DomainError(f"target {target} is beyond the attainable mean range before saturation") from exc
        if sign * fh >= 0:
            break
        lo, hi = hi, 2.0 * hi
        if abs(hi) > 1e6:
            raise DomainError(f"target {target} is outside the attainable mean range")
    a, b = (lo, hi) if lo < hi else (hi, lo)
    lam = 0.5 * (a + b)
    for _ in range(max_iter):
        f = d1(lam) - target
        if abs(f) <= scale:
            return lam
        if f < 0:
            a = lam
        else:
            b = lam
        d2 = cumulant_derivative(spec, lam, 0.0, t, 2)
        step = lam - f / d2 if d2 > 0 else math.nan
        lam = step if a < step < b else 0.5 * (a + b)
        if b - a <= 4 * np.finfo(float).eps * max(1.0, abs(lam)):
            break
    f = d1(lam) - target
    if abs(f) <= scale:
        return lam
    raise ArithmeticError(f"tilt search stalled with residual {f}")


def _log_sf(x: float) -> float:
    return float(stats.norm.logsf(x))


def brownian_sup_tail(x: float) -> float:
    """``log P(max_{u <= 1} |W_u| >= x)`` for standard Brownian motion.

    For ``x >= 1`` the reflection series ``4 sum_k (-1)^(k-1) Phibar((2k-1)x)``
    (summed in log space relative to its first term); below that the
    complementary eigenfunction series
    ``1 - (4/pi) sum_k (-1)^k/(2k+1) exp(-(2k+1)^2 pi^2 / (8 x^2))``.
    """
    if x <= 0:
        return 0.0
    if x >= 1.0:
        base = _log_sf(x)
        acc = 1.0
        for k in range(2, 50):
            term = math.exp(_log_sf((2 * k - 1) * x) - base)
            acc += (-1) ** (k - 1) * term
            if term < 1e-17:
                break
        return math.log(4.0) + base + math.log(acc)
    s = 0.0
    for k in range(0, 200):
        term = math.exp(-((2 * k + 1) ** 2) * math.pi**2 / (8.0 * x * x)) / (2 * k + 1)
        s += (-1) ** k * term
        if term < 1e-18:
            break
    return math.log1p(-4.0 / math.pi * s)


def _finish(log_p, lo, hi, method, n, t, seed, scaling, **extra) -> TailEstimate:
    p = math.exp(log_p) if log_p > -math.inf else 0.0
    rate = log_p / float(scaling.speed(t)) if log_p > -math.inf else None
    return TailEstimate(p, min(lo, p), max(hi, p), method, n, rate, log_p, t=t, seed=seed, **extra)


def _degenerate(spec, scaling, t, event, method, n, seed):
    # X is identically 0 on [0, t]
    if event.kind == "endpoint":
        hit = event.c <= 0
    elif event.kind == "sup":
        hit = False
    else:
        hit = bool(np.max(np.abs(event.f.values)) <= event.delta)
    lp = 0.0 if hit else -math.inf
    return _finish(lp, float(hit), float(hit), method, n, t, seed, scaling)


def _exact(spec, scaling, t, event, seed):
    if spec.kernel is not None and any(w != 0.0 for _, w in spec.kernel.atoms):
        raise ValueError("exact tails need a pure-diffusion spec")
    sd = math.sqrt(float(spec.diffusion(t)) - float(spec.diffusion(0.0)))
    x = event.c * float(scaling(t)) / sd
    if event.kind == "endpoint":
        lp = _log_sf(x)
    elif event.kind == "sup":
        lp = brownian_sup_tail(x)
    else:
        raise ValueError("exact tails cover endpoint and sup events")
    p = math.exp(lp)
    return _finish(lp, p, p, "exact", 0, t, seed, scaling)


def _direct(spec, scaling, t, event, n_reps, seed, m, workers):
    S = float(scaling(t))
    if event.kind == "endpoint":
        vals = mc_terminal_values(spec, t, n_reps, seed, workers=workers) / S
        hits = vals >= event.c
    else:
        plan = PathPlan(spec, np.linspace(0.0, t, m + 1))
        hits = _run_replicates(
            lambda i: float(event.indicator(plan.draw(replicate_rng(seed, i)) / S)[0]), n_reps, workers
        ) > 0.5
    k = int(np.count_nonzero(hits))
    if k == 0:
        warnings.warn(f"no hits in {n_reps} replicates; reporting a one-sided 95% upper bound", RuntimeWarning)
        return TailEstimate(0.0, 0.0, 1.0 - 0.05 ** (1.0 / n_reps), "direct", n_reps, None, -math.inf,
                            se=0.0, t=t, seed=seed)
    ci = stats.binomtest(k, n_reps).proportion_ci(confidence_level=0.95, method="exact")
    p = k / n_reps
    return _finish(math.log(p), ci.low, ci.high, "direct", n_reps, t, seed, scaling,
                   se=math.sqrt(p * (1 - p) / n_reps))


def _tilted(spec, scaling, t, event, n_reps, seed, workers):
    if event.kind != "endpoint":
        raise ValueError("the tilted estimator targets endpoint events only")
    S = float(scaling(t))
    target = event.c * S
    lam = tilt_parameter(spec, t, target)
    Lam = cumulant(spec, lam, 0.0, t)
    x = mc_terminal_values(spec, t, n_reps, seed, tilt=lam, workers=workers)
    logw = -lam * x + Lam
    hit = x >= target
    n = n_reps
    if not np.any(hit):
        warnings.warn("no tilted replicate reached the event", RuntimeWarning)
        log_p = -math.inf
    else:
        log_p = float(special.logsumexp(logw[hit]) - math.log(n))
    # second moment of the weighted indicator, in log space
    log_m2 = float(special.logsumexp(2 * logw[hit]) - math.log(n)) if np.any(hit) else -math.inf
    rel_var = max(math.exp(log_m2 - 2 * log_p) - 1.0, 0.0) if log_p > -math.inf else math.inf
    p = math.exp(log_p) if log_p > -math.inf else 0.0
    se = p * math.sqrt(rel_var / (n - 1)) if p > 0 else 0.0
    ess = math.exp(2 * log_p - log_m2) * n if p > 0 else 0.0
    w = np.exp(logw)
    mw = float(np.mean(w))
    mw_se = float(np.std(w, ddof=1) / math.sqrt(n))
    return _finish(log_p, max(p - Z95 * se, 0.0), p + Z95 * se, "tilted", n, t, seed, scaling,
                   se=se, ess=ess, mean_weight=mw, mean_weight_se=mw_se)


def tail_probability(
    spec: ProcessSpec,
    scaling: ScalingFn,
    t: float,
    event: EventSpec,
    method: str = "direct",
    n_reps: int = 10_000,
    seed: int = 0,
    m: int = 64,
    workers: int | None = None,
) -> TailEstimate:
    """Probability of ``event`` for the path scaled at time ``t``.

    Parameters
    ----------
    method : {"direct", "tilted", "exact"}
    m : int
        Knots per path for the ``sup`` and ``ball`` events under ``direct``.

    Returns
    -------
    TailEstimate
        ``direct`` uses exact Clopper-Pearson intervals; ``tilted`` a normal
        interval from the weighted indicators plus weight diagnostics
        (``ess``, ``mean_weight``, ``mean_weight_se``).  With zero direct hits
        the probability is 0, ``ci_high`` the one-sided 95% bound
        ``1 - 0.05^(1/n)`` and ``empirical_rate`` is ``None``.
    """
    if method not in ("direct", "tilted", "exact"):
        raise ValueError(f"unknown method {method!r}")
    if method != "exact" and n_reps < 2:
        raise ValueError("n_reps must be >= 2")
    if variance(spec, 0.0, t) == 0.0:
        return _degenerate(spec, scaling, t, event, method, n_reps if method != "exact" else 0, seed)
    if method == "exact":
        return _exact(spec, scaling, t, event, seed)
    if method == "direct":
        return _direct(spec, scaling, t, event, n_reps, seed, m, workers)
    return _tilted(spec, scaling, t, event, n_reps, seed, workers)


def rate_gap(estimate: TailEstimate, event: EventSpec, params: RateParams) -> tuple[float, float | None]:
    """``(theoretical, gap)`` with ``theoretical = -inf_{event} I`` and ``gap = empirical_rate - theoretical``.

    For a zero-hit estimate the gap is undefined and ``None`` is returned with
    a warning.
    """
    if event.kind in ("endpoint", "sup"):
        theoretical = 0.0 if event.c == 0 else -sublevel_ball_infima(event.c, 2.0, params)[0]
    else:
        theoretical = -inf_rate_over_ball(event.f, event.delta, params)[0]
    if estimate.empirical_rate is None:
        warnings.warn("probability is 0; the rate gap is undefined", RuntimeWarning)
        return theoretical, None
    return theoretical, estimate.empirical_rate - theoretical


def report_json(estimate: TailEstimate, event: EventSpec, params: RateParams) -> str:
    theoretical, gap = rate_gap(estimate, event, params)
    d = {
        "event": event.to_dict(),
        "t": estimate.t,
        "method": estimate.method,
        "probability": estimate.probability,
        "log_probability": estimate.log_probability,
        "ci": [estimate.ci_low, estimate.ci_high],
        "empirical_rate": estimate.empirical_rate,
        "theoretical_rate": theoretical,
        "gap": gap,
        "seed": estimate.seed,
        "n_reps": estimate.n_reps,
        "diagnostics": {k: v for k, v in asdict(estimate).items()
                        if k in ("se", "ess", "mean_weight", "mean_weight_se") and v is not None},
    }
    return json.dumps(d, indent=2, allow_nan=True)
