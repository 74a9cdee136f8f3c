import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import Polynomial

from strassen_kit.characteristics import (
    DivergenceError,
    DomainError,
    JumpKernel,
    ProcessSpec,
    SaturationError,
    ScalingFn,
    Verdict,
    brownian,
    check_growth_conditions,
    cumulant,
    cumulant_derivative,
    dominating_measure,
    error_term,
    exp_moment_bound,
    max_jump,
    null_spec,
    scale_spec,
    symmetric_poisson,
    truncated_levy,
    variance,
    weighted_levy,
)

BUILTINS = [
    brownian(),
    brownian(2.5),
    symmetric_poisson(2.0),
    symmetric_poisson(0.7, 1.5),
    weighted_levy(1.0),
    weighted_levy(0.5),
    truncated_levy(),
]


def test_brownian_variance():
    assert variance(brownian(), 0, 1) == 1.0


def test_poisson_variance_is_rate_times_t():
    for t in (0.3, 1.0, 7.0):
        assert variance(symmetric_poisson(2.0), 0, t) == pytest.approx(2 * t, rel=1e-14)


def test_weighted_variance_cubic():
    for t in (1.0, 2.0, 10.0):
        assert variance(weighted_levy(1.0), 0, t) == pytest.approx(t**3 / 3, rel=1e-13)


def test_weighted_variance_callable_scale_matches_polynomial():
    # s^0.5 goes through quadrature; variance is int s ds = t^2/2
    assert variance(weighted_levy(0.5), 0, 4.0) == pytest.approx(8.0, abs=1e-9)


def test_variance_bad_interval():
    with pytest.raises(ValueError):
        variance(brownian(), 2.0, 1.0)


def test_variance_divergent_callable():
    spec = ProcessSpec(kernel=JumpKernel(((1.0, 1.0),), time_weight=lambda r: 1.0 / np.asarray(r) ** 2))
    with pytest.raises(DivergenceError):
        variance(spec, 0.0, 1.0)


def test_diffusion_must_start_at_zero_and_increase():
    with pytest.raises(ValueError):
        ProcessSpec(Polynomial([1.0, 1.0]))
    with pytest.raises(ValueError):
        ProcessSpec(Polynomial([0.0, -1.0]))


def test_negative_weight_rejected():
    with pytest.raises(ValueError):
        JumpKernel(((1.0, -0.1),))


def test_brownian_cumulant():
    for lam in (-2.0, 0.3, 4.0):
        assert cumulant(brownian(), lam, 0, 3.0) == pytest.approx(lam * lam * 1.5, rel=1e-15)


@pytest.mark.parametrize("spec", BUILTINS + [null_spec()])
def test_cumulant_zero_at_zero(spec):
    assert cumulant(spec, 0.0, 0.0, 5.0) == 0.0


def _cosh_series(lam, n_terms=60):
    # cosh(lam) - 1 = sum_{k>=1} lam^(2k) / (2k)!, summed independently of numpy.cosh
    return math.fsum(lam ** (2 * k) / math.factorial(2 * k) for k in range(1, n_terms))


@pytest.mark.parametrize("lam", [-3.0, -0.5, 0.01, 1.0, 2.5])
@pytest.mark.parametrize("rho,t", [(2.0, 1.0), (0.7, 3.5)])
def test_poisson_cumulant_series_oracle(lam, rho, t):
    expected = rho * t * _cosh_series(lam)
    assert cumulant(symmetric_poisson(rho), lam, 0, t) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_poisson_cumulant_quadrature_route():
    # same process, but the time weight is a callable so the quadrature branch is used
    k = JumpKernel(((1.0, 1.0), (-1.0, 1.0)), time_weight=lambda r: np.ones_like(np.asarray(r, dtype=float)))
    spec = ProcessSpec(kernel=k)
    for lam in (-2.0, 0.5, 1.7):
        assert cumulant(spec, lam, 0, 2.0) == pytest.approx(4.0 * _cosh_series(lam), rel=1e-12)


def test_cumulant_saturation_reports_atom():
    with pytest.raises(SaturationError) as exc:
        cumulant(symmetric_poisson(2.0, 10.0), 100.0, 0, 1)
    assert exc.value.atom[0] in (10.0, -10.0)


def test_cumulant_derivatives_match_finite_differences():
    spec = truncated_levy()
    lam, h = 0.7, 1e-5
    d1 = (cumulant(spec, lam + h, 0, 20) - cumulant(spec, lam - h, 0, 20)) / (2 * h)
    assert cumulant_derivative(spec, lam, 0, 20, 1) == pytest.approx(d1, rel=1e-8)
    d2 = (cumulant_derivative(spec, lam + h, 0, 20, 1) - cumulant_derivative(spec, lam - h, 0, 20, 1)) / (2 * h)
    assert cumulant_derivative(spec, lam, 0, 20, 2) == pytest.approx(d2, rel=1e-8)


def test_bound_equals_mgf_for_brownian():
    for lam in (-1.0, 0.5, 2.0):
        assert exp_moment_bound(brownian(), lam, 0, 2.0) == pytest.approx(math.exp(lam * lam), rel=1e-15)


@pytest.mark.parametrize("spec", BUILTINS)
def test_bound_at_zero_is_one(spec):
    assert exp_moment_bound(spec, 0.0, 0.0, 3.0) == 1.0


def test_c1_bound_unit_jumps_value():
    assert exp_moment_bound(symmetric_poisson(1.0), 1.0, 0, 1, "C1") == pytest.approx(
        math.exp(0.5 + math.e / 6), rel=1e-14
    )
    assert exp_moment_bound(symmetric_poisson(1.0), 1.0, 0, 1) == pytest.approx(2.5935, abs=2e-4)


def test_c2_domain():
    with pytest.raises(DomainError):
        exp_moment_bound(symmetric_poisson(), 2.0, 0, 1, "C2")


def test_c2_normalization_absorbs_unnormalized_kernel():
    G = dominating_measure(symmetric_poisson(4.0), 0, 1)
    assert G.normalization == pytest.approx(4.0)


def test_max_jump():
    assert max_jump(brownian(), 0, 5) == 0.0
    assert max_jump(symmetric_poisson(), 0.2, 3.0) == 1.0
    assert max_jump(weighted_levy(1.0), 0, 3.0) == 3.0
    assert max_jump(truncated_levy(), 0, 1.0) == 0.5


def test_max_jump_linear_scale_matches_scan():
    spec = ProcessSpec(kernel=JumpKernel(((1.0, 1.0), (-1.0, 1.0)), scale=Polynomial([1.0, 1.0])))
    for t in (0.5, 2.0, 9.0):
        scan = np.max(np.abs(1.0 + np.linspace(0, t, 20001)))
        assert max_jump(spec, 0, t) == pytest.approx(1 + t, rel=1e-15)
        assert max_jump(spec, 0, t) == pytest.approx(scan, rel=1e-12)


def test_max_jump_unbounded_callable():
    spec = ProcessSpec(kernel=JumpKernel(((1.0, 1.0),), scale=lambda r: 1.0 / np.asarray(r, dtype=float)))
    assert max_jump(spec, 0.0, 1.0) == math.inf
    with pytest.raises(DomainError):
        error_term(spec, 1.0, 0.0, 1.0, "C1")


def test_scaling_forms():
    S = ScalingFn("strassen", gamma=1.0)
    assert S(10.0) == pytest.approx(math.sqrt(2 * 10 * math.log(math.log(math.e**math.e))))
    assert S(1e6) == pytest.approx(math.sqrt(2e6 * math.log(math.log(1e6))))
    assert ScalingFn("power", p=0.75)(1e4) == pytest.approx(1e3)
    tab = ScalingFn("custom", table=((1.0, 1.0), (100.0, 10.0)))
    assert tab(10.0) == pytest.approx(math.sqrt(10.0))
    assert ScalingFn("power", p=0.75).speed(1e4) == pytest.approx(100.0)
    with pytest.raises(ValueError):
        ScalingFn("strassen", gamma=0.0)


def test_conditions_strassen_holds():
    rep = check_growth_conditions(brownian(), ScalingFn("strassen", gamma=1.0))
    assert rep.verdicts["scaling_window"] is Verdict.HOLDS_EXACT
    assert rep.verdicts["scaling_regularity"] is Verdict.HOLDS_EXACT


def test_conditions_linear_scaling_fails():
    rep = check_growth_conditions(brownian(), ScalingFn("power", gamma=1.0, p=1.0))
    assert rep.verdicts["scaling_window"] is Verdict.FAILS


def test_conditions_bounded_jumps():
    rep = check_growth_conditions(symmetric_poisson(), ScalingFn("strassen", gamma=1.0))
    assert rep.verdicts["bounded_jumps"] is Verdict.HOLDS_EXACT
    assert rep.bounded_jumps_route
    d = rep.to_dict()
    assert set(d["verdicts"]) == set(rep.channels)


def test_conditions_truncated_levy_bounded_jumps():
    rep = check_growth_conditions(truncated_levy(), ScalingFn("strassen", gamma=1.0))
    assert rep.verdicts["bounded_jumps"] in (Verdict.HOLDS_EXACT, Verdict.HOLDS_EMPIRICALLY)


def test_scale_spec_variance_and_cumulant():
    for spec in (brownian(), symmetric_poisson(), truncated_levy()):
        s2 = scale_spec(spec, 2.0)
        assert variance(s2, 0, 30) == pytest.approx(4 * variance(spec, 0, 30), rel=1e-12)
        assert cumulant(s2, 0.3, 0, 30) == pytest.approx(cumulant(spec, 0.6, 0, 30), rel=1e-12)


# ---------------------------------------------------------------- properties

spec_st = st.sampled_from(BUILTINS)


@given(spec_st, st.floats(0, 50), st.floats(0, 50))
def test_variance_additive(spec, a, b):
    s, t = sorted((a, b))
    whole = variance(spec, 0, t)
    parts = variance(spec, 0, s) + variance(spec, s, t)
    assert whole == pytest.approx(parts, rel=1e-10, abs=1e-10)
    assert variance(spec, s, t) >= 0


@given(spec_st, st.floats(0, 10), st.floats(0.1, 10))
def test_cumulant_convex(spec, s, length):
    t = s + length
    lam = np.linspace(-3, 3, 61)
    vals = np.array([cumulant(spec, x, s, t) for x in lam])
    assert np.all(vals[:-2] - 2 * vals[1:-1] + vals[2:] >= -1e-9)


@given(spec_st, st.floats(0, 10), st.floats(0.1, 10), st.floats(-3, 3))
def test_bound_dominates_mgf(spec, s, length, lam):
    t = s + length
    assert cumulant(spec, lam, s, t) <= math.log(exp_moment_bound(spec, lam, s, t)) + 1e-12


@given(spec_st, st.floats(0, 10), st.floats(0.1, 10), st.floats(-1, 1))
def test_c2_bound_dominates_mgf(spec, s, length, lam):
    t = s + length
    assert cumulant(spec, lam, s, t) <= math.log(exp_moment_bound(spec, lam, s, t, "C2")) + 1e-12


@given(spec_st, st.floats(0, 10), st.floats(0.1, 10), st.floats(-2, 2))
def test_taylor_consistency(spec, s, length, lam):
    t = s + length
    gap = abs(cumulant(spec, lam, s, t) - 0.5 * lam * lam * variance(spec, s, t))
    assert gap <= abs(lam) ** 3 * error_term(spec, lam, s, t) + 1e-12
