"""Cluster-set diagnostics along one long path.

A single path is simulated up to ``t_K`` and scaled snapshots
``X(t_k s) / S(t_k)`` are taken on the geometric schedule ``t_k = t_0 q^k``.
For each snapshot we record an upper bound on its sup-distance to
``Phi(1/2) = {I <= 1/2}``, its distance to a list of interior targets, and the
iterated-logarithm statistic ``|X(t_k)| / sqrt(2 t_k^gamma loglog t_k)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .characteristics import ProcessSpec, ScalingFn
from .ratefn import RateParams, distance_to_sublevel, rate_J_discrete, sublevel_project
from .sampler import GridFunction, SamplePath, sample_path_on_grid, scaled_snapshot

__all__ = [
    "SnapshotSchedule",
    "StrassenReport",
    "snapshot_schedule",
    "schedule_grid",
    "default_targets",
    "cluster_stats",
    "lil_statistic",
]

E_E = math.e**math.e
REPORT_SCHEMA = "strassen-kit/strassen v1"


@dataclass(frozen=True)
class SnapshotSchedule:
    q: float
    t0: float
    K: int

    def __post_init__(self):
        if not self.q > 1:
            raise ValueError("q must be > 1")
        if not self.t0 >= E_E * (1 - 1e-15):
            raise ValueError("t0 must be >= e^e")
        if self.K < 0:
            raise ValueError("K must be >= 0")

    @property
    def times(self) -> np.ndarray:
        return self.t0 * self.q ** np.arange(self.K + 1, dtype=float)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


def snapshot_schedule(q: float, t0: float, K: int) -> SnapshotSchedule:
    return SnapshotSchedule(float(q), float(t0), int(K))


def schedule_grid(schedule: SnapshotSchedule, m: int, max_points: float = 1e6) -> tuple[np.ndarray, list[float]]:
    """Simulation grid for a schedule.

    Segment ``(t_{k-1}, t_k]`` uses step ``max(1, t_k / max_points)``; all
    snapshot knots ``t_k j / m`` are added so snapshots are read off exactly.
    Returns the grid and the per-segment steps.
    """
    times = schedule.times
    pieces = []
    steps = []
    left = 0.0
    for tk in times:
        step = max(1.0, tk / max_points)
        steps.append(step)
        n = int(math.ceil((tk - left) / step))
        pieces.append(left + step * np.arange(1, n))
        left = tk
    knots = (times[:, None] * np.linspace(0.0, 1.0, m + 1)[None, :]).ravel()
    grid = np.unique(np.concatenate([[0.0], times, knots, *pieces]))
    return grid, steps


def default_targets(params: RateParams, m: int) -> dict[str, GridFunction]:
    """``0``, ``0.9 sigma s^gamma`` (``I = 0.405``) and a sine profile with ``I = 0.4``."""
    g, sig = params.gamma, math.sqrt(params.sigma2)
    amp = math.sqrt(1.6) * sig / math.pi
    return {
        "zero": GridFunction.from_callable(lambda s: 0.0 * s, m),
        "line": GridFunction.from_callable(lambda s: 0.9 * sig * s**g, m),
        "sine": GridFunction.from_callable(lambda s: amp * np.sin(math.pi * s**g), m),
    }


@dataclass
class StrassenReport:
    times: np.ndarray
    dist_bounds: np.ndarray
    scaling_bounds: np.ndarray
    tube_bounds: np.ndarray
    running_sup: np.ndarray
    target_names: list[str]
    target_distances: np.ndarray
    target_min: dict[str, float]
    lil_values: np.ndarray
    lil_running_max: np.ndarray
    seed: int
    q: float
    t0: float
    K: int
    m: int
    steps: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "seed": self.seed,
            "schedule": {"q": self.q, "t0": self.t0, "K": self.K, "horizon": float(self.times[-1])},
            "m": self.m,
            "steps": list(map(float, self.steps)),
            "times": self.times.tolist(),
            "dist_bounds": self.dist_bounds.tolist(),
            "scaling_bounds": self.scaling_bounds.tolist(),
            "tube_bounds": self.tube_bounds.tolist(),
            "running_sup": self.running_sup.tolist(),
            "max_dist_bound": float(self.running_sup[-1]),
            "targets": self.target_names,
            "target_distances": self.target_distances.tolist(),
            "target_min": self.target_min,
            "lil_values": self.lil_values.tolist(),
            "lil_running_max": float(self.lil_running_max[-1]),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# schema: {REPORT_SCHEMA}\n# seed: {self.seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "dist_bound", *[f"dist_{n}" for n in self.target_names], "lil_value"])
        for k, t in enumerate(self.times):
            w.writerow([repr(float(t)), repr(float(self.dist_bounds[k])),
                        *[repr(float(x)) for x in self.target_distances[k]], repr(float(self.lil_values[k]))])
        return buf.getvalue()


def _schedule_path(spec, schedule, m, seed):
    grid, steps = schedule_grid(schedule, m)
    return sample_path_on_grid(spec, grid, seed), steps


def _lil_values(path: SamplePath, schedule: SnapshotSchedule, gamma: float) -> np.ndarray:
    lil = ScalingFn("strassen", gamma=gamma)
    t = schedule.times
    return np.abs(path.at(t)) / lil(t)


def cluster_stats(
    spec: ProcessSpec,
    scaling: ScalingFn,
    schedule: SnapshotSchedule,
    targets: dict[str, GridFunction] | list[GridFunction] | None,
    params: RateParams,
    m: int = 64,
    seed: int = 0,
    path: SamplePath | None = None,
) -> StrassenReport:
    """Distances of scaled snapshots to ``Phi(1/2)`` and to interior targets.

    The distance bound per snapshot is the smaller of two valid upper bounds:
    radial scaling into ``Phi(1/2)`` (``sublevel_project``) and the tube
    bisection of :func:`distance_to_sublevel`.  Both are reported.

    Parameters
    ----------
    targets : mapping or list of GridFunction, optional
        Knot values whose smallest-``I`` interpolant has ``I < 1/2``; defaults to :func:`default_targets`.
    path : SamplePath, optional
        Use this path instead of simulating one (it must reach the horizon).
    """
    if targets is None:
        targets = default_targets(params, m)
    if not isinstance(targets, dict):
        targets = {f"target{i}": g for i, g in enumerate(targets)}
    for name, g in targets.items():
        # targets are compared on knots, so admissibility uses the smallest-I interpolant of the knot values
        if not rate_J_discrete(g, params)[0] < 0.5:
            raise ValueError(f"target {name!r} has I >= 1/2")
    if path is None:
        path, steps = _schedule_path(spec, schedule, m, seed)
    else:
        steps = []
    times = schedule.times
    sb, tb = [], []
    tdist = np.empty((len(times), len(targets)))
    for k, t in enumerate(times):
        snap = scaled_snapshot(path, float(t), scaling, m)
        sb.append(sublevel_project(snap, 0.5, params)[1])
        tb.append(distance_to_sublevel(snap, 0.5, params)[0])
        for j, g in enumerate(targets.values()):
            tdist[k, j] = float(np.max(np.abs(snap.values - g(snap.knots))))
    sb, tb = np.array(sb), np.array(tb)
    dist = np.minimum(sb, tb)
    lil = _lil_values(path, schedule, params.gamma)
    return StrassenReport(
        times=times,
        dist_bounds=dist,
        scaling_bounds=sb,
        tube_bounds=tb,
        running_sup=np.maximum.accumulate(dist),
        target_names=list(targets),
        target_distances=tdist,
        target_min={n: float(tdist[:, j].min()) for j, n in enumerate(targets)},
        lil_values=lil,
        lil_running_max=np.maximum.accumulate(lil),
        seed=int(seed),
        q=schedule.q,
        t0=schedule.t0,
        K=schedule.K,
        m=m,
        steps=steps,
    )


def lil_statistic(spec: ProcessSpec, scaling: ScalingFn, schedule: SnapshotSchedule, seed: int,
                  m: int = 64) -> tuple[float, list[float]]:
    """``|X(t_k)| / sqrt(2 t_k^gamma loglog t_k)`` on the schedule and its running maximum.

    The path is simulated on the same grid as :func:`cluster_stats` uses, so a
    shared seed gives the same values.  ``gamma`` is taken from ``scaling``.
    """
    path, _ = _schedule_path(spec, schedule, m, seed)
    vals = _lil_values(path, schedule, scaling.gamma)
    return float(np.max(vals)), vals.tolist()
