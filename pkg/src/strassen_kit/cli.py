"""Configuration, experiment dispatch and artifact bookkeeping.

Usage::

    strassen-kit <experiment> --config run.toml [--seed N] [--out DIR]

The config is TOML with flat sections ``[process]``, ``[scaling]``, ``[rate]``,
``[experiment]`` and ``[run]``.  Unknown keys are rejected and every value is
range-checked before anything runs.  Every artifact is deterministic given the
config and seed; ``manifest.json`` lists their SHA-256 digests together with
the full config (defaults included) and the wall-clock time.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli
import tomli_w
from scipy import integrate

from . import __version__
from .characteristics import (
    ProcessSpec,
    ScalingFn,
    brownian,
    check_growth_conditions,
    null_spec,
    scale_spec,
    symmetric_poisson,
    truncated_levy,
    weighted_levy,
)
from .mdp import EventSpec, rate_gap, tail_probability
from .ratefn import (
    RateParams,
    distance_to_sublevel,
    inf_rate_over_ball,
    rate_I,
    rate_J_discrete,
    sublevel_project,
)
from .sampler import GridFunction, mc_moments, sample_path
from .strassen import cluster_stats, lil_statistic, snapshot_schedule

__all__ = ["ConfigError", "Config", "RunManifest", "parse_config", "serialize_config", "run", "main"]

EXPERIMENTS = ("simulate", "conditions", "rate", "duality", "mdp", "strassen", "lil")
FAMILIES = ("null", "brownian", "poisson", "weighted_levy", "truncated_levy")
PROFILES = ("power", "sine")


class ConfigError(ValueError):
    """Unknown key or out-of-range value in a config."""


@dataclass
class ProcessConfig:
    family: str = "brownian"
    sigma2: float = 1.0
    rate: float = 2.0
    size: float = 1.0
    power: float = 1.0
    amplitude: float = 1.0

    def validate(self):
        _one_of("process.family", self.family, FAMILIES)
        _positive("process.sigma2", self.sigma2)
        _positive("process.rate", self.rate)
        _positive("process.size", self.size)
        if not self.power >= 0:
            raise ConfigError("process.power must be >= 0")
        _positive("process.amplitude", self.amplitude)

    def build(self) -> ProcessSpec:
        if self.family == "null":
            spec = null_spec()
        elif self.family == "brownian":
            spec = brownian(self.sigma2)
        elif self.family == "poisson":
            spec = symmetric_poisson(self.rate, self.size)
        elif self.family == "weighted_levy":
            spec = weighted_levy(self.power, self.sigma2)
        else:
            spec = truncated_levy()
        return spec if self.amplitude == 1.0 else scale_spec(spec, self.amplitude)


@dataclass
class ScalingConfig:
    form: str = "strassen"
    gamma: float = 1.0
    p: float = 0.75
    table: list = field(default_factory=list)

    def validate(self):
        _one_of("scaling.form", self.form, ("strassen", "power", "custom"))
        if not self.gamma > 0:
            raise ConfigError("γ must be > 0 (scaling.gamma)")
        _positive("scaling.p", self.p)
        if self.form == "custom" and len(self.table) < 2:
            raise ConfigError("scaling.table needs at least two [t, S] rows for the custom form")

    def build(self) -> ScalingFn:
        table = tuple(tuple(map(float, row)) for row in self.table) if self.form == "custom" else None
        try:
            return ScalingFn(self.form, self.gamma, self.p, table)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class RateConfig:
    gamma: float = 1.0
    sigma2: float = 1.0

    def validate(self):
        if not self.gamma > 0:
            raise ConfigError("γ must be > 0 (rate.gamma)")
        if not self.sigma2 > 0:
            raise ConfigError("σ² must be > 0 (rate.sigma2)")

    def build(self) -> RateParams:
        return RateParams(self.gamma, self.sigma2)


@dataclass
class ExperimentConfig:
    name: str = ""
    # simulate
    horizon: float = 1000.0
    step: float = 1.0
    n_reps: int = 10_000
    # simulate / mdp
    t: list = field(default_factory=lambda: [100.0, 10_000.0, 1_000_000.0])
    # mdp
    event: str = "endpoint"
    c: float = 1.0
    delta: float = 0.1
    method: str = "exact"
    # rate / duality / mdp ball centre
    profile: str = "power"
    profile_amplitude: float = 1.0
    profile_exponent: float = 2.0
    n: int = 64
    n_max: int = 4096
    level: float = 0.5
    # strassen / lil
    q: float = 1.5
    t0: float = math.e**math.e
    K: int = 40
    m: int = 64

    def validate(self):
        _one_of("experiment.name", self.name, EXPERIMENTS)
        _positive("experiment.horizon", self.horizon)
        _positive("experiment.step", self.step)
        if self.step > self.horizon:
            raise ConfigError("experiment.step must not exceed experiment.horizon")
        if not self.n_reps >= 2:
            raise ConfigError("experiment.n_reps must be >= 2")
        if not self.t or any(not x > 0 for x in self.t):
            raise ConfigError("experiment.t must be a nonempty list of positive times")
        _one_of("experiment.event", self.event, ("endpoint", "sup", "ball"))
        if not self.c >= 0:
            raise ConfigError("experiment.c must be >= 0")
        _positive("experiment.delta", self.delta)
        _one_of("experiment.method", self.method, ("direct", "tilted", "exact"))
        _one_of("experiment.profile", self.profile, PROFILES)
        if not self.n >= 1:
            raise ConfigError("experiment.n must be >= 1")
        if not self.n_max >= 2:
            raise ConfigError("experiment.n_max must be >= 2")
        _positive("experiment.level", self.level)
        if not self.q > 1:
            raise ConfigError("experiment.q must be > 1")
        if not self.t0 >= math.e**math.e * (1 - 1e-15):
            raise ConfigError("experiment.t0 must be >= e^e")
        if not self.K >= 0:
            raise ConfigError("experiment.K must be >= 0")
        if not self.m >= 1:
            raise ConfigError("experiment.m must be >= 1")


@dataclass
class RunConfig:
    seed: int = 0
    output_dir: str = "out"
    workers: int = 0

    def validate(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError("run.seed must be a 64-bit unsigned integer")
        if not self.workers >= 0:
            raise ConfigError("run.workers must be >= 0 (0 means automatic)")


@dataclass
class Config:
    process: ProcessConfig = field(default_factory=ProcessConfig)
    scaling: ScalingConfig = field(default_factory=ScalingConfig)
    rate: RateConfig = field(default_factory=RateConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def validate(self) -> "Config":
        for section in (self.process, self.scaling, self.rate, self.experiment, self.run):
            section.validate()
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunManifest:
    config: dict
    artifacts: dict[str, str]
    wall_clock: float
    version: str
    seed: int

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def _positive(name, value):
    if not value > 0:
        raise ConfigError(f"{name} must be > 0")


def _one_of(name, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{name} must be one of {', '.join(allowed)}; got {value!r}")


def _coerce(name, default, value):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, list)
        if ok and name == "experiment.t":
            ok = all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
            value = [float(x) for x in value] if ok else value
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{name} has the wrong type ({type(value).__name__})")
    return value


def parse_config(text: str, experiment: str | None = None) -> Config:
    """Parse and validate a TOML config; missing keys take their defaults."""
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    cfg = Config()
    sections = {f.name: getattr(cfg, f.name) for f in dataclasses.fields(cfg)}
    for sec_name, body in raw.items():
        if sec_name not in sections:
            raise ConfigError(f"unknown section [{sec_name}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{sec_name}] must be a table")
        target = sections[sec_name]
        known = {f.name for f in dataclasses.fields(target)}
        for key, value in body.items():
            if key not in known:
                raise ConfigError(f"unknown key {sec_name}.{key}")
            name = f"{sec_name}.{key}"
            setattr(target, key, _coerce(name, getattr(target, key), value))
    if experiment is not None:
        if cfg.experiment.name and cfg.experiment.name != experiment:
            raise ConfigError(f"config names experiment {cfg.experiment.name!r} but {experiment!r} was requested")
        cfg.experiment.name = experiment
    return cfg.validate()


def serialize_config(cfg: Config) -> str:
    return tomli_w.dumps(cfg.to_dict())


# --------------------------------------------------------------------------- experiments


def _profile(cfg: Config):
    """Smooth test profile, its derivative and exact I."""
    e, params = cfg.experiment, cfg.rate.build()
    a = e.profile_amplitude
    g = params.gamma
    if e.profile == "power":
        k = e.profile_exponent
        fn = lambda s: a * np.asarray(s, dtype=float) ** k  # noqa: E731
        # I(a s^k) = a^2 k^2 / (2 sigma2 gamma (2k - gamma))
        exact = a * a * k * k / (2 * params.sigma2 * g * (2 * k - g)) if 2 * k > g else math.inf
        if a == 0:
            exact = 0.0
    else:
        fn = lambda s: a * np.sin(math.pi * np.asarray(s, dtype=float) ** g)  # noqa: E731
        exact = a * a * math.pi**2 / (4 * params.sigma2)
    return fn, exact


def _write(out: Path, name: str, text: str, written: list[Path]) -> None:
    p = out / name
    p.write_text(text)
    written.append(p)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _exp_simulate(cfg, out, written):
    e, seed = cfg.experiment, cfg.run.seed
    spec = cfg.process.build()
    path = sample_path(spec, e.horizon, e.step, seed)
    _write(out, "path.csv", path.to_csv(), written)
    rows = []
    for i, t in enumerate(e.t):
        mo = mc_moments(spec, t, e.n_reps, seed + i + 1, workers=cfg.run.workers or None)
        rows.append({"t": t, "mean": mo.mean, "variance": mo.variance, "se_mean": mo.se_mean,
                     "se_variance": mo.se_variance, "n_reps": mo.count})
    _write(out, "report.json", _json({"spec": spec.label, "seed": seed, "moments": rows}), written)


def _exp_conditions(cfg, out, written):
    rep = check_growth_conditions(cfg.process.build(), cfg.scaling.build())
    _write(out, "report.json", _json(rep.to_dict()), written)


def _exp_rate(cfg, out, written):
    e, params = cfg.experiment, cfg.rate.build()
    fn, exact = _profile(cfg)
    f = GridFunction.from_callable(fn, e.n)
    J, beta = rate_J_discrete(f, params)
    inf, argmin = inf_rate_over_ball(f, e.delta, params)
    g, scale_bound = sublevel_project(f, e.level, params)
    tube_bound, _ = distance_to_sublevel(f, e.level, params)
    _write(out, "profile.csv", f.to_csv(), written)
    _write(out, "ball_argmin.csv", argmin.to_csv(), written)
    _write(out, "report.json", _json({
        "profile": e.profile, "n": e.n, "I_profile": exact, "I_interpolant": rate_I(f, params),
        "J_n": J, "maximizer_levels": beta.levels.tolist(), "delta": e.delta, "inf_over_ball": inf,
        "level": e.level, "distance_bound_scaling": scale_bound, "distance_bound_tube": tube_bound,
    }), written)


def _exp_duality(cfg, out, written):
    e, params = cfg.experiment, cfg.rate.build()
    fn, exact = _profile(cfg)
    lines = ["# schema: strassen-kit/duality v1", "n,J_n,I,gap"]
    n = 2
    while n <= e.n_max:
        J, _ = rate_J_discrete(GridFunction.from_callable(fn, n), params)
        lines.append(f"{n},{J!r},{exact!r},{exact - J!r}")
        n *= 2
    _write(out, "duality.csv", "\n".join(lines) + "\n", written)


def _exp_mdp(cfg, out, written):
    e, params, seed = cfg.experiment, cfg.rate.build(), cfg.run.seed
    spec, scaling = cfg.process.build(), cfg.scaling.build()
    if e.event == "endpoint":
        event = EventSpec.endpoint(e.c)
    elif e.event == "sup":
        event = EventSpec.sup(e.c)
    else:
        event = EventSpec.ball(GridFunction.from_callable(_profile(cfg)[0], e.m), e.delta)
    rows = []
    lines = ["# schema: strassen-kit/mdp v1", "t,probability,ci_low,ci_high,empirical_rate,theoretical_rate,gap"]
    for i, t in enumerate(e.t):
        est = tail_probability(spec, scaling, t, event, e.method, e.n_reps, seed + i, m=e.m,
                               workers=cfg.run.workers or None)
        theo, gap = rate_gap(est, event, params)
        rows.append({"event": event.to_dict(), "t": t, "method": est.method, "probability": est.probability,
                     "log_probability": est.log_probability, "ci": [est.ci_low, est.ci_high],
                     "empirical_rate": est.empirical_rate, "theoretical_rate": theo, "gap": gap,
                     "seed": seed + i, "n_reps": est.n_reps, "ess": est.ess,
                     "mean_weight": est.mean_weight, "mean_weight_se": est.mean_weight_se})
        lines.append(",".join(repr(x) if x is not None else "" for x in
                              (t, est.probability, est.ci_low, est.ci_high, est.empirical_rate, theo, gap)))
    _write(out, "report.json", _json(rows), written)
    _write(out, "mdp.csv", "\n".join(lines) + "\n", written)


def _exp_strassen(cfg, out, written):
    e = cfg.experiment
    sched = snapshot_schedule(e.q, e.t0, e.K)
    rep = cluster_stats(cfg.process.build(), cfg.scaling.build(), sched, None, cfg.rate.build(), e.m, cfg.run.seed)
    _write(out, "report.json", rep.to_json() + "\n", written)
    _write(out, "strassen.csv", rep.to_csv(), written)


def _exp_lil(cfg, out, written):
    e = cfg.experiment
    sched = snapshot_schedule(e.q, e.t0, e.K)
    mx, traj = lil_statistic(cfg.process.build(), cfg.scaling.build(), sched, cfg.run.seed, e.m)
    _write(out, "report.json", _json({"running_max": mx, "trajectory": traj, "times": sched.times.tolist(),
                                      "seed": cfg.run.seed}), written)
    lines = ["# schema: strassen-kit/lil v1", "t,lil_value,running_max"]
    run_max = np.maximum.accumulate(traj)
    lines += [f"{t!r},{v!r},{r!r}" for t, v, r in zip(sched.times.tolist(), traj, run_max.tolist())]
    _write(out, "lil.csv", "\n".join(lines) + "\n", written)


_DISPATCH = {
    "simulate": _exp_simulate,
    "conditions": _exp_conditions,
    "rate": _exp_rate,
    "duality": _exp_duality,
    "mdp": _exp_mdp,
    "strassen": _exp_strassen,
    "lil": _exp_lil,
}


def run(cfg: Config) -> RunManifest:
    """Run the configured experiment and write its artifacts plus ``manifest.json``.

    On any exception every file written so far is removed before re-raising.
    """
    cfg.validate()
    out = Path(cfg.run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    start = time.perf_counter()
    try:
        _DISPATCH[cfg.experiment.name](cfg, out, written)
        digests = {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in written}
        manifest = RunManifest(cfg.to_dict(), digests, time.perf_counter() - start, __version__, cfg.run.seed)
        _write(out, "manifest.json", manifest.to_json() + "\n", written)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return manifest


def _exit_code(exc: BaseException) -> int:
    from .characteristics import DomainError

    if isinstance(exc, (ArithmeticError, DomainError)):
        return 2
    return 1


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="strassen-kit", description="Moderate deviation and Strassen-law experiments.")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args(argv)
    try:
        cfg = parse_config(args.config.read_text(), experiment=args.experiment)
        if args.seed is not None:
            cfg.run.seed = args.seed
        if args.out is not None:
            cfg.run.output_dir = str(args.out)
        cfg.validate()
    except (ConfigError, OSError) as exc:
        print(f"strassen-kit: {exc}", file=sys.stderr)
        return 1
    try:
        manifest = run(cfg)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        print(f"strassen-kit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)
    print(json.dumps({"output_dir": cfg.run.output_dir, "artifacts": manifest.artifacts}, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
