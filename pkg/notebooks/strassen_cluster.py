# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Cluster set of scaled Brownian snapshots
#
# Snapshots `X(t_k s) / sqrt(2 t_k loglog t_k)` on `t_k = t_0 q^k` should stay
# close to `{I <= 1/2}` and keep revisiting every interior function. A short
# schedule keeps this quick; the acceptance run uses `K = 40`.

# %%
import math

from strassen_kit import RateParams, ScalingFn, brownian, cluster_stats, snapshot_schedule

params = RateParams(gamma=1.0, sigma2=1.0)
schedule = snapshot_schedule(q=2.0, t0=math.e**math.e, K=20)
rep = cluster_stats(brownian(), ScalingFn("strassen", gamma=1.0), schedule, None, params, m=64, seed=7)

# %%
for k in range(0, len(rep.times), 4):
    print(f"t={rep.times[k]:10.1f} dist<={rep.dist_bounds[k]:.3f} "
          + " ".join(f"{n}={d:.3f}" for n, d in zip(rep.target_names, rep.target_distances[k]))
          + f" lil={rep.lil_values[k]:.3f}")
print("closest approach per target:", {n: round(v, 3) for n, v in rep.target_min.items()})
