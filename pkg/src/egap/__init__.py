"""Excessive-gap Lagrangian decomposition solvers for separable convex problems."""

from .algorithms import (
    ALGORITHMS,
    ConfigurationError,
    ConvergenceTrace,
    InvariantViolationError,
    IterateState,
    ScheduleConditionError,
    SolverConfig,
    run,
    run_baseline_fixed,
)
from .generators import (
    desk_scale_family,
    generate_example1,
    generate_random_allocation,
    generate_strongly_convex,
)
from .problem import (
    ComponentSpec,
    SeparableProblem,
    SmoothingConstants,
    add_slack_component,
    build_problem,
    compute_constants,
    load_problem,
    problem_to_doc,
    spectral_norm,
)
from .reference import CertificationError, ReferenceSolution, brute_force_tiny, reference_solve

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
