# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Empirical moderate deviation rates
#
# With `S(t) = t^0.75` the tail `P(X_t / S(t) >= 1)` of Brownian motion decays
# like `exp(-speed(t) / 2)`. The log rate approaches `-1/2` slowly, with a
# polynomial-log correction.

# %%
from strassen_kit import EventSpec, RateParams, ScalingFn, brownian, rate_gap, tail_probability

S = ScalingFn("power", gamma=1.0, p=0.75)
event = EventSpec.endpoint(1.0)
params = RateParams(gamma=1.0, sigma2=1.0)
for t in (1e2, 1e4, 1e6):
    est = tail_probability(brownian(), S, t, event, "exact")
    print(f"t={t:.0e}: log p={est.log_probability:.3f} rate={est.empirical_rate:.4f} gap={rate_gap(est, event, params)[1]:.4f}")

# %% [markdown]
# ## Direct and tilted Monte Carlo
#
# At small `t` the direct estimator still sees hits; the tilted estimator
# reaches probabilities far below `1/n_reps`.

# %%
for method, t in (("direct", 1e2), ("tilted", 1e2), ("tilted", 1e4)):
    est = tail_probability(brownian(), S, t, event, method, 20_000, seed=1)
    exact = tail_probability(brownian(), S, t, event, "exact").probability
    print(f"{method:7s} t={t:.0e}: p={est.probability:.3e} [{est.ci_low:.2e}, {est.ci_high:.2e}] exact={exact:.3e}")
