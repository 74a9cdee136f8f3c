"""Moderate deviations and Strassen's law for additive processes.

Modules
-------
characteristics
    Exact moment calculus for processes given by their characteristics.
sampler
    Path simulation, discretisation and reproducible Monte Carlo replicates.
ratefn
    The quadratic path rate function, its discrete dual and sublevel sets.
mdp
    Tail probabilities of scaled paths and their log rates.
strassen
    Snapshot schedules, cluster-set distances and the iterated-logarithm statistic.
cli
    Config-driven experiments (``strassen-kit``).
"""

__version__ = "0.1.0"

from .characteristics import (  # noqa: E402
    ProcessSpec,
    JumpKernel,
    ScalingFn,
    brownian,
    null_spec,
    symmetric_poisson,
    weighted_levy,
    truncated_levy,
    scale_spec,
    variance,
    cumulant,
    exp_moment_bound,
    check_growth_conditions,
)
from .sampler import GridFunction, SamplePath, sample_path, mc_moments, scaled_snapshot  # noqa: E402
from .ratefn import RateParams, rate_I, rate_J_discrete, inf_rate_over_ball, sublevel_project  # noqa: E402
from .mdp import EventSpec, TailEstimate, tail_probability, rate_gap  # noqa: E402
from .strassen import snapshot_schedule, cluster_stats, lil_statistic  # noqa: E402

__all__ = [
    "__version__",
    "ProcessSpec", "JumpKernel", "ScalingFn",
    "brownian", "null_spec", "symmetric_poisson", "weighted_levy", "truncated_levy", "scale_spec",
    "variance", "cumulant", "exp_moment_bound", "check_growth_conditions",
    "GridFunction", "SamplePath", "sample_path", "mc_moments", "scaled_snapshot",
    "RateParams", "rate_I", "rate_J_discrete", "inf_rate_over_ball", "sublevel_project",
    "EventSpec", "TailEstimate", "tail_probability", "rate_gap",
    "snapshot_schedule", "cluster_stats", "lil_statistic",
]
