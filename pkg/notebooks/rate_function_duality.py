# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Rate function and its discrete dual
#
# For a piecewise-linear `f` the quadratic rate `I(f)` has a closed form, and
# the step-function dual `J_n` over `n` knots never exceeds it. Refining the
# knots closes the gap. For `gamma = 2` this profile has nonzero slope at 0,
# so `I = inf` and `J_n` creeps up without bound (logarithmically in `n`).

# %%
import numpy as np

from strassen_kit import GridFunction, RateParams, rate_I, rate_J_discrete
from strassen_kit.ratefn import inf_rate_over_ball

# %%
for gamma in (0.5, 1.0, 2.0):
    params = RateParams(gamma=gamma, sigma2=1.0)
    f = GridFunction.from_callable(lambda s: np.sin(np.pi * s) * s, 64)
    exact = rate_I(f, params)
    rows = [(n, rate_J_discrete(f.resample(n), params)[0]) for n in (8, 64, 512, 4096)]
    print(f"gamma={gamma}: I={exact:.6f}", " ".join(f"J_{n}={j:.6f}" for n, j in rows))

# %% [markdown]
# ## Smallest rate in a sup-norm ball
#
# The infimum of `I` over `{g : |g - f| <= delta}` is a box-constrained QP.
# Coordinate descent and the taut-string solver agree.

# %%
params = RateParams(gamma=1.0, sigma2=1.0)
f = GridFunction.from_callable(lambda s: 1.2 * s, 256)
for delta in (0.05, 0.2, 0.5):
    cd = inf_rate_over_ball(f, delta, params, method="cd")[0]
    ts = inf_rate_over_ball(f, delta, params, method="taut")[0]
    print(f"delta={delta}: cd={cd:.8f} taut={ts:.8f} (no-ball value {1.2**2 / 2:.2f})")
