"""Path simulation from characteristics, discretisations and scaled snapshots."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._fn import gl_integrals, invert_cumulative, is_constant, is_poly, product
from .characteristics import ProcessSpec, ScalingFn

__all__ = [
    "SamplePath",
    "GridFunction",
    "MomentEstimate",
    "replicate_rng",
    "worker_count",
    "PathPlan",
    "sample_path",
    "sample_path_on_grid",
    "discretize",
    "discretization_gap",
    "scaled_snapshot",
    "mc_moments",
    "mc_terminal_values",
]

PATH_SCHEMA = "strassen-kit/path v1"
GRID_SCHEMA = "strassen-kit/gridfunction v1"


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for replicate ``index`` of a run with master ``seed``.

    The pair is hashed by :class:`numpy.random.SeedSequence` (``spawn_key``
    mixing), so the stream depends only on ``(seed, index)``.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(index),)))


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("STRASSEN_KIT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class SamplePath:
    times: np.ndarray
    values: np.ndarray
    seed: int
    spec_label: str
    step: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        if self.values[0] != 0.0:
            raise ValueError("a sample path starts at 0")

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def at(self, u) -> np.ndarray:
        """Right-continuous evaluation: value at the last grid time ``<= u``."""
        u = np.asarray(u, dtype=float)
        idx = np.searchsorted(self.times, u * (1 + 1e-15) + 1e-300, side="right") - 1
        return self.values[np.clip(idx, 0, len(self.times) - 1)]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(f"# schema: {PATH_SCHEMA}\n# spec: {self.spec_label}\n# seed: {self.seed}\n# step: {self.step}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "value"])
        for t, v in zip(self.times, self.values):
            w.writerow([repr(float(t)), repr(float(v))])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "SamplePath":
        text = Path(source).read_text() if not isinstance(source, str) or "\n" not in source else source
        meta = {}
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
            elif line and line != "time,value":
                t, v = line.split(",")
                rows.append((float(t), float(v)))
        arr = np.array(rows)
        step = meta.get("step")
        return cls(arr[:, 0], arr[:, 1], int(meta.get("seed", 0)), meta.get("spec", ""),
                   None if step in (None, "None") else float(step))


@dataclass
class GridFunction:
    """Piecewise-linear function on ``[0, 1]`` with ``f(0) = 0``.

    ``knots`` default to the uniform grid ``j/n``; any strictly increasing knot
    vector from 0 to 1 is accepted.
    """

    values: np.ndarray
    knots: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = len(self.values) - 1
        if n < 1:
            raise ValueError("a grid function needs at least two knots")
        if self.knots is None:
            self.knots = np.linspace(0.0, 1.0, n + 1)
        self.knots = np.asarray(self.knots, dtype=float)
        if self.knots.shape != self.values.shape:
            raise ValueError("knots and values must have equal length")
        if self.knots[0] != 0.0 or self.knots[-1] != 1.0 or np.any(np.diff(self.knots) <= 0):
            raise ValueError("knots must increase strictly from 0 to 1")
        if self.values[0] != 0.0:
            raise ValueError("a grid function vanishes at 0")

    @classmethod
    def from_callable(cls, fn, n: int) -> "GridFunction":
        knots = np.linspace(0.0, 1.0, n + 1)
        vals = np.asarray(fn(knots), dtype=float)
        vals[0] = 0.0
        return cls(vals, knots)

    @property
    def n(self) -> int:
        return len(self.values) - 1

    def __call__(self, s):
        return np.interp(s, self.knots, self.values)

    def resample(self, n: int) -> "GridFunction":
        """Linear interpolant evaluated on the uniform ``n``-interval grid."""
        knots = np.linspace(0.0, 1.0, n + 1)
        vals = self(knots)
        vals[0] = 0.0
        return GridFunction(vals, knots)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __mul__(self, c) -> "GridFunction":
        return GridFunction(self.values * float(c), self.knots)

    __rmul__ = __mul__

    def __sub__(self, other: "GridFunction") -> np.ndarray:
        return self.values - other(self.knots)

    def to_csv(self, path=None) -> str:
        lines = [f"# schema: {GRID_SCHEMA}", "knot,value"]
        lines += [f"{float(k)!r},{float(v)!r}" for k, v in zip(self.knots, self.values)]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "GridFunction":
        text = Path(source).read_text() if "\n" not in str(source) else source
        rows = [line.split(",") for line in text.splitlines() if line and not line.startswith("#") and line != "knot,value"]
        arr = np.array(rows, dtype=float)
        return cls(arr[:, 1], arr[:, 0])


@dataclass
class MomentEstimate:
    mean: float
    variance: float
    count: int
    se_mean: float
    se_variance: float
    values: np.ndarray | None = field(default=None, repr=False)


# --------------------------------------------------------------------------- simulation


class PathPlan:
    """Deterministic per-interval quantities for simulating ``spec`` on ``times``.

    Everything that does not depend on the random draws (diffusion increments,
    per-atom intensities, compensators) is computed once, so many replicates
    on the same grid share it.  ``tilt`` simulates under the exponentially
    tilted law ``exp(tilt * X_T - cumulant)``: Gaussian increments get mean
    ``tilt * dC`` and atom intensities are multiplied by ``exp(tilt * z_eff)``,
    while the compensation stays the untilted mean.
    """

    def __init__(self, spec: ProcessSpec, times, tilt: float = 0.0):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or len(times) < 2 or times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        self.spec = spec
        self.times = times
        self.tilt = float(tilt)
        lo, hi = times[:-1], times[1:]
        C = np.asarray(spec.diffusion(times), dtype=float)
        self.dC = np.maximum(np.diff(C), 0.0)
        self.sd = np.sqrt(self.dC)
        self.atoms = []
        k = spec.kernel
        if k is None:
            return
        a = k.time_weight
        alpha = k.scale
        scale_const = alpha is None or is_constant(alpha)
        c0 = 1.0 if alpha is None else float(alpha(0.0))
        for i, (z, w) in enumerate(k.atoms):
            if w == 0.0 or z == 0.0:
                continue
            act = k.activation(i)
            wlo = np.maximum(lo, act)
            whi = np.where(hi > wlo, hi, wlo)
            if not np.any(whi > wlo):
                continue
            if scale_const:
                base = gl_integrals(a, wlo, whi)
                comp = w * z * c0 * base
                density = a
                intensity = w * base * math.exp(self.tilt * z * c0)
                sizes = None
            else:
                za = alpha * z if is_poly(alpha) else (lambda r, z=z: z * np.asarray(alpha(r), dtype=float))
                comp = w * gl_integrals(product(za, a), wlo, whi)
                if self.tilt == 0.0:
                    density = a
                else:
                    density = (lambda r, za=za: np.asarray(a(r), dtype=float) * np.exp(self.tilt * za(r)))
                intensity = w * gl_integrals(density, wlo, whi)
                sizes = za
            self.atoms.append(
                dict(z=z * c0, intensity=np.maximum(intensity, 0.0), comp=comp, lo=wlo, hi=whi,
                     density=density, sizes=sizes)
            )

    def increments(self, rng: np.random.Generator) -> np.ndarray:
        n = len(self.dC)
        inc = rng.standard_normal(n) * self.sd
        if self.tilt != 0.0:
            inc += self.tilt * self.dC
        for atom in self.atoms:
            counts = rng.poisson(atom["intensity"])
            if atom["sizes"] is None:
                jumps = atom["z"] * counts
            else:
                total = int(counts.sum())
                jumps = np.zeros(n)
                if total:
                    idx = np.repeat(np.arange(n), counts)
                    u = rng.random(total)
                    lo, hi = atom["lo"][idx], atom["hi"][idx]
                    if is_constant(atom["density"]):
                        epochs = lo + u * (hi - lo)
                    else:
                        epochs = invert_cumulative(atom["density"], lo, hi, u)
                    jumps = np.bincount(idx, weights=atom["sizes"](epochs), minlength=n)
            inc += jumps - atom["comp"]
        return inc

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.increments(rng))])


def sample_path_on_grid(spec: ProcessSpec, times, seed: int, step: float | None = None) -> SamplePath:
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1)))
    plan = PathPlan(spec, times)
    return SamplePath(plan.times, plan.draw(rng), int(seed), spec.label, step)


def uniform_grid(horizon: float, step: float) -> np.ndarray:
    if not step > 0:
        raise ValueError("step must be > 0")
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    if step > horizon:
        raise ValueError("step must not exceed the horizon")
    n = int(math.floor(horizon / step + 1e-9))
    grid = np.arange(n + 1) * step
    if horizon - grid[-1] > 1e-9 * horizon:
        grid = np.append(grid, horizon)
    else:
        grid[-1] = horizon
    return grid


def sample_path(spec: ProcessSpec, horizon: float, step: float, seed: int) -> SamplePath:
    """Simulate ``spec`` on the uniform grid ``0, step, 2 step, ...`` up to ``horizon``.

    Increments are exact in law: Gaussian with variance ``C(u+step) - C(u)``
    plus, per atom, a Poisson number of jumps at epochs drawn from the
    (time-weighted, truncated) intensity, minus the exact compensator.
    """
    return sample_path_on_grid(spec, uniform_grid(horizon, step), seed, step)


def discretize(path: SamplePath, n: int, scaling: ScalingFn) -> GridFunction:
    """Knot values ``X(j) / S(n)`` at ``s = j/n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if path.horizon < n * (1 - 1e-12):
        raise ValueError(f"path horizon {path.horizon} is shorter than n = {n}")
    vals = path.at(np.arange(n + 1, dtype=float)) / scaling(float(n))
    vals[0] = 0.0
    return GridFunction(vals)


def discretization_gap(path: SamplePath, n: int, scaling: ScalingFn) -> float:
    """``sup_s |X(floor(ns)) - X(ns)| / S(n)`` evaluated on the path grid."""
    mask = path.times <= n
    u = path.times[mask]
    left = path.at(np.floor(u))
    return float(np.max(np.abs(path.values[mask] - left)) / scaling(float(n)))


def scaled_snapshot(path: SamplePath, t: float, scaling: ScalingFn, m: int) -> GridFunction:
    """Knot values ``X(t j/m) / S(t)``, nearest-left samples of the path."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if t > path.horizon * (1 + 1e-12):
        raise ValueError(f"t = {t} exceeds the path horizon {path.horizon}")
    s = np.linspace(0.0, 1.0, m + 1)
    vals = path.at(s * t) / scaling(t)
    vals[0] = 0.0
    return GridFunction(vals, s)


# --------------------------------------------------------------------------- replicates


def _run_replicates(fn, n_reps: int, workers: int | None, chunk: int = 2048) -> np.ndarray:
    """Evaluate ``fn(index)`` for all replicate indices; result in index order."""
    out = np.empty(n_reps)
    blocks = [(s, min(s + chunk, n_reps)) for s in range(0, n_reps, chunk)]

    def work(block):
        s, e = block
        for i in range(s, e):
            out[i] = fn(i)

    nw = min(worker_count(workers), len(blocks))
    if nw <= 1:
        for b in blocks:
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=nw) as ex:
            list(ex.map(work, blocks))
    return out


def mc_terminal_values(spec: ProcessSpec, t: float, n_reps: int, seed: int, tilt: float = 0.0,
                       workers: int | None = None) -> np.ndarray:
    """``X_t`` for ``n_reps`` replicates, replicate ``i`` driven by ``replicate_rng(seed, i)``."""
    plan = PathPlan(spec, [0.0, float(t)], tilt=tilt)
    return _run_replicates(lambda i: plan.increments(replicate_rng(seed, i))[0], n_reps, workers)


def moments_of(values: np.ndarray) -> MomentEstimate:
    n = len(values)
    mean = float(np.mean(values))
    dev = values - mean
    var = float(np.sum(dev * dev) / (n - 1))
    m4 = float(np.mean(dev**4))
    se_var = math.sqrt(max(m4 - var * var, 0.0) / n)
    return MomentEstimate(mean, var, n, math.sqrt(var / n), se_var, values)


def mc_moments(spec: ProcessSpec, t: float, n_reps: int, seed: int, workers: int | None = None) -> MomentEstimate:
    """Mean and variance of ``X_t`` over independent replicates.

    Terminal values are simulated exactly in one step.  Replicate seeds are
    derived from ``(seed, index)`` and the reduction runs in index order, so the
    result does not depend on ``workers``.
    """
    if n_reps < 2:
        raise ValueError("n_reps must be >= 2")
    return moments_of(mc_terminal_values(spec, t, n_reps, seed, workers=workers))
