"""Acceptance criteria, each at its pinned tolerance.

Every check records one ``PASS``/``FAIL`` line that is printed in the pytest
terminal summary.  Two sub-checks are known not to hold with the recorded
inputs; they are marked ``xfail(strict=True)`` so the tolerance stays as
stated and an unexpected pass is reported.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats
from scipy.optimize import lsq_linear

from conftest import ACCEPTANCE_LINES
from strassen_kit.characteristics import (
    ScalingFn,
    brownian,
    cumulant,
    exp_moment_bound,
    symmetric_poisson,
    truncated_levy,
    variance,
    weighted_levy,
)
from strassen_kit.mdp import EventSpec, tail_probability
from strassen_kit.ratefn import (
    RateParams,
    inf_rate_over_ball,
    modulus_bound,
    rate_I,
    rate_J_discrete,
    sublevel_project,
)
from strassen_kit.sampler import GridFunction, mc_moments, mc_terminal_values
from strassen_kit.strassen import cluster_stats, snapshot_schedule

# recorded before the first pilot run; any change requires re-recording the pilot
STRASSEN_SEED = 20240917

TOL_DUALITY_GAP = 1e-3
TOL_VARIANCE_LAW = 0.05
TOL_BOUND = 1e-12
TOL_ENDPOINT_RATE = 0.01
TOL_QP_ORACLE = 1e-8
TOL_MDP_RATE = 0.15
TILT_SE_BAND = 3.0
WEIGHT_SE_BAND = 4.0
STRASSEN_SUP = 0.35
STRASSEN_TARGET = 0.40
LIL_BAND = (0.5, 1.3)


def record(criterion, ok, detail, elapsed=None, budget=None):
    timing = "" if elapsed is None else f" [{elapsed:.2f}s" + ("" if budget is None else f" / budget {budget:g}s") + "]"
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}{timing}")
    return ok


def dense_qp(f, delta, params):
    n = f.n
    D = np.diff(f.knots**params.gamma)
    A = np.diag(1 / np.sqrt(D)) - np.diag(1 / np.sqrt(D[1:]), -1)
    res = lsq_linear(A, np.zeros(n), bounds=(f.values[1:] - delta, f.values[1:] + delta), method="bvls", tol=1e-15)
    return float(np.sum((A @ res.x) ** 2) / (2 * params.sigma2))


def test_1_duality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_gap, exact_ok = 0.0, True
    for gamma in (0.5, 1.0, 2.0):
        params = RateParams(gamma, 1.0)
        for _ in range(20):
            v = np.concatenate([[0.0], np.cumsum(rng.normal(scale=0.5, size=64))])
            if gamma >= 2:
                v[1] = 0.0  # otherwise I is infinite
            f = GridFunction(v)
            I = rate_I(f, params)
            exact_ok &= rate_J_discrete(f, params)[0] <= I
            J4096 = rate_J_discrete(f.resample(4096), params)[0]
            worst_gap = max(worst_gap, abs(J4096 - I) / max(I, 1.0))
    elapsed = time.perf_counter() - t0
    ok = exact_ok and worst_gap <= TOL_DUALITY_GAP and elapsed < 5
    record("1 duality", ok, f"J_64 <= I on all 60: {exact_ok}; max rel |J_4096 - I| = {worst_gap:.2e}", elapsed, 5)
    assert ok


def test_2_variance_law():
    t0 = time.perf_counter()
    t = 10.0
    mo = mc_moments(weighted_levy(1.0), t, 100_000, seed=36)
    ratio = mo.variance / (t * t * t)
    elapsed = time.perf_counter() - t0
    ok = abs(ratio - 1 / 3) <= TOL_VARIANCE_LAW / 3 and elapsed < 60
    record("2 variance law", ok, f"var/t^3 = {ratio:.4f} (target 1/3 +- 5%)", elapsed, 60)
    assert ok


def finite_range(spec, s, t, cap):
    """Largest |lambda| <= cap at which the bound is still a finite number (bisection)."""
    if math.isfinite(exp_moment_bound(spec, cap, s, t)) and math.isfinite(exp_moment_bound(spec, -cap, s, t)):
        return cap
    lo, hi = 0.0, cap
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fin = math.isfinite(exp_moment_bound(spec, mid, s, t)) and math.isfinite(exp_moment_bound(spec, -mid, s, t))
        lo, hi = (mid, hi) if fin else (lo, mid)
    return lo


def test_3_exponential_moment_bound():
    t0 = time.perf_counter()
    violations, checked, finite = 0, 0, 0
    for spec in (symmetric_poisson(2.0), truncated_levy()):
        for s, t in ((0.0, 1.0), (0.0, 10.0), (2.0, 30.0)):
            for cond, lam_max in (("C1", finite_range(spec, s, t, 5.0)), ("C2", 1.0)):
                for lam in np.linspace(-lam_max, lam_max, 101):
                    bound = exp_moment_bound(spec, lam, s, t, cond)
                    # exp(K) <= B (1 + tol), compared in log space so large lambda t cannot overflow
                    checked += 1
                    finite += math.isfinite(bound)
                    violations += not (cumulant(spec, lam, s, t) <= math.log(bound) + math.log1p(TOL_BOUND))
    elapsed = time.perf_counter() - t0
    ok = violations == 0
    record("3 exponential moment bound", ok, f"{violations} violations in {checked} checks "
           f"({finite} with a finite bound)", elapsed)
    assert ok


def test_4_endpoint_rate_constant():
    t0 = time.perf_counter()
    worst, worst_oracle = 0.0, 0.0
    for gamma in (1.0, 2.0):
        params = RateParams(gamma, 1.0)
        for c in (0.5, 1.0, 2.0):
            f = GridFunction.from_callable(lambda s: c * s**gamma, 256)
            v, _ = inf_rate_over_ball(f, 1e-3, params)
            worst = max(worst, abs(v - c * c / 2) / (c * c / 2))
            f16 = GridFunction.from_callable(lambda s: c * s**gamma, 16)
            worst_oracle = max(worst_oracle, abs(inf_rate_over_ball(f16, 1e-3, params)[0] - dense_qp(f16, 1e-3, params)))
    elapsed = time.perf_counter() - t0
    ok = worst <= TOL_ENDPOINT_RATE and worst_oracle <= TOL_QP_ORACLE
    record("4 endpoint rate constant", ok, f"max rel error {worst:.2e}; oracle gap {worst_oracle:.1e}", elapsed)
    assert ok


def test_5_mdp_rate():
    t0 = time.perf_counter()
    S = ScalingFn("power", gamma=1.0, p=0.75)
    rates, approx = [], []
    for t in (1e2, 1e4, 1e6):
        e = tail_probability(brownian(), S, t, EventSpec.endpoint(1.0), "exact")
        rates.append(e.empirical_rate)
        x = S(t) / math.sqrt(t)
        approx.append(-0.5 - (t / S(t) ** 2) * (math.log(x) + 0.5 * math.log(2 * math.pi)))
    elapsed = time.perf_counter() - t0
    gaps = [abs(r + 0.5) for r in rates]
    monotone = gaps[0] > gaps[1] > gaps[2]
    within = gaps[2] / 0.5 <= TOL_MDP_RATE
    ok = monotone and within and elapsed < 1
    record("5 MDP rate", ok, "rates " + ", ".join(f"{r:.4f}" for r in rates)
           + f" (asymptotic {approx[-1]:.4f}); rel gap at 1e6 = {gaps[2] / 0.5:.3f}", elapsed, 1)
    assert ok


@pytest.fixture(scope="module")
def tilted_run():
    t0 = time.perf_counter()
    S = ScalingFn("power", gamma=1.0, p=0.75)
    e = tail_probability(brownian(), S, 1e4, EventSpec.endpoint(1.0), "tilted", 100_000, seed=6)
    return e, time.perf_counter() - t0


def test_6a_tilted_estimate(tilted_run):
    e, elapsed = tilted_run
    exact = stats.norm.sf(10.0)
    z = abs(e.probability - exact) / e.se
    ok = z <= TILT_SE_BAND and elapsed < 60
    record("6a tilted estimate", ok, f"p = {e.probability:.4e} vs {exact:.4e}, {z:.2f} SE", elapsed, 60)
    assert ok


@pytest.mark.xfail(strict=True, reason="log-weights are N(-50, 100): the sample mean of 1e5 weights cannot reach 1")
def test_6b_weight_unbiasedness(tilted_run):
    e, _ = tilted_run
    z = abs(e.mean_weight - 1.0) / e.mean_weight_se
    ok = z <= WEIGHT_SE_BAND
    record("6b mean likelihood weight", ok, f"mean {e.mean_weight:.3e} +- {e.mean_weight_se:.1e} ({z:.3g} SE from 1)")
    assert ok


@pytest.fixture(scope="module")
def strassen_run():
    t0 = time.perf_counter()
    sched = snapshot_schedule(1.5, math.e**math.e, 40)
    rep = cluster_stats(brownian(), ScalingFn("strassen", gamma=1.0), sched, None, RateParams(), 64, STRASSEN_SEED)
    return rep, time.perf_counter() - t0


def test_7a_strassen_containment(strassen_run):
    rep, elapsed = strassen_run
    sup = float(rep.running_sup[-1])
    ok = sup <= STRASSEN_SUP and elapsed < 600
    record("7a Strassen containment", ok, f"running sup of distance bounds {sup:.3f} (scaling-only "
           f"{rep.scaling_bounds.max():.3f}), seed {STRASSEN_SEED}", elapsed, 600)
    assert ok


@pytest.mark.xfail(strict=True, reason="recorded seed: closest snapshot to 0.9s is 0.49 (band met by ~63% of seeds)")
def test_7b_strassen_target(strassen_run):
    rep, _ = strassen_run
    d = rep.target_min["line"]
    ok = d <= STRASSEN_TARGET
    record("7b Strassen target 0.9s", ok, f"min distance {d:.3f} (threshold {STRASSEN_TARGET})")
    assert ok


def test_7c_lil(strassen_run):
    rep, _ = strassen_run
    mx = float(rep.lil_running_max[-1])
    ok = LIL_BAND[0] <= mx <= LIL_BAND[1]
    record("7c LIL running max", ok, f"{mx:.3f} in {LIL_BAND}")
    assert ok


def test_8_invariants():
    t0 = time.perf_counter()
    rng = np.random.default_rng(808)
    results = {}
    homog = True
    refine = True
    for _ in range(300):
        gamma = float(rng.choice([0.5, 1.0, 1.5, 2.0]))
        params = RateParams(gamma, float(rng.uniform(0.2, 4)))
        v = np.concatenate([[0.0], rng.normal(size=int(rng.integers(2, 30)))])
        if gamma >= 2:
            v[1] = 0.0
        f = GridFunction(v)
        c = float(rng.uniform(-5, 5))
        I = rate_I(f, params)
        homog &= math.isclose(rate_I(f * c, params), c * c * I, rel_tol=1e-12, abs_tol=1e-300)
        coarse = rate_J_discrete(f, params)[0]
        fine = rate_J_discrete(f.resample(f.n * 3), params)[0]
        refine &= coarse <= fine * (1 + 1e-12) and fine <= I * (1 + 1e-12)
    results["homogeneity"] = homog
    results["refinement"] = refine
    modulus = True
    for _ in range(1000):
        gamma = float(rng.choice([0.5, 1.0, 2.0]))
        params = RateParams(gamma, 1.0)
        v = np.concatenate([[0.0], np.cumsum(rng.normal(size=int(rng.integers(2, 30))))])
        if gamma >= 2:
            v[1] = 0.0
        r = float(rng.uniform(0.05, 2))
        g, _ = sublevel_project(GridFunction(v), r, params)
        i, j = np.triu_indices(g.n + 1, 1)
        mb = np.array([modulus_bound(r, params, g.knots[a], g.knots[b]) for a, b in zip(i, j)])
        modulus &= bool(np.all(np.abs(g.values[j] - g.values[i]) <= mb * (1 + 1e-12) + 1e-15))
    results["modulus"] = modulus
    additive, convex = True, True
    for spec in (brownian(), symmetric_poisson(), weighted_levy(1.0), truncated_levy()):
        for s, t in ((0.3, 2.0), (1.0, 40.0)):
            additive &= math.isclose(variance(spec, 0, t), variance(spec, 0, s) + variance(spec, s, t),
                                     rel_tol=1e-10, abs_tol=1e-10)
            lam = np.linspace(-3, 3, 61)
            cv = np.array([cumulant(spec, x, s, t) for x in lam])
            convex &= bool(np.all(cv[:-2] - 2 * cv[1:-1] + cv[2:] >= -1e-9))
    results["additivity"] = additive
    results["convexity"] = convex
    a = mc_terminal_values(truncated_levy(), 50.0, 20_000, 5, workers=1)
    b = mc_terminal_values(truncated_levy(), 50.0, 20_000, 5, workers=4)
    results["thread determinism"] = bool(np.array_equal(a, b))
    elapsed = time.perf_counter() - t0
    ok = all(results.values()) and elapsed < 120
    record("8 invariant suites", ok, ", ".join(f"{k} {'ok' if v else 'BROKEN'}" for k, v in results.items()),
           elapsed, 120)
    assert ok
