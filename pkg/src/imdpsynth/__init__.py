"""Certified controller synthesis via interval-MDP abstractions.

Pipeline: partition the state space, abstract the linear stochastic
system into an interval MDP with PAC transition intervals estimated from
noise samples, solve it with robust value iteration for a reach-avoid
objective, refine the policy into a piecewise-affine feedback controller,
and validate the probabilistic certificate by Monte Carlo simulation.
"""

from ._kernels import BACKEND
from .dynamics import (
    GaussianNoise,
    InputBoundsError,
    LiftedNoise,
    LinearSystem,
    MixtureNoise,
    NoiseModel,
    RankDeficiencyError,
    Trace,
    TriangularNoise,
    UniformBoxNoise,
    input_for_target,
    lift,
    rng_stream,
    simulate,
    step,
    step_deterministic,
)
from .partition import (
    OUTSIDE,
    Partition,
    label_regions,
    region_box,
    region_center,
    region_centers,
    region_id,
    region_index,
    region_of,
    region_of_many,
    region_vertices,
)
from .abstraction import (
    AbstractAction,
    AbstractionConfig,
    AbstractionVacuousError,
    ProbabilityInterval,
    TransitionCounts,
    build_imdp,
    build_pointmdp,
    count_successors,
    default_actions,
    enabled_actions,
    interval_from_counts,
    sample_noise_set,
)
from .robust_mdp import (
    InfeasibleIntervalError,
    IntervalMDP,
    ModelFormatError,
    RobustSolution,
    StationarySolution,
    export_explicit,
    import_explicit,
    inner_min,
    nominal_value_iteration,
    optimistic_value_iteration,
    robust_value_iteration,
    robust_value_iteration_infinite,
    structurally_equal,
)
from .controller import (
    FeedbackController,
    ProvenanceMismatchError,
    ValidationReport,
    refine,
    region_predicates,
    state_for_region,
    validate,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    preset,
    run_pipeline,
    run_sweep,
)

__version__ = "0.1.0"
