"""Finite-difference solver for distributed optimal control of a
Cahn-Hilliard phase-field equation, with convergence-study tooling."""

from .exprparse import ParseError, evaluate, parse, pretty
from .grid import (
    Field,
    GridError,
    SpaceGrid,
    TimeGrid,
    Trajectory,
    bilaplacian,
    diff_backward,
    inner_product,
    laplacian,
    mass,
    norm_l2,
    norm_max,
    seminorm_h1,
    seminorm_h2,
)
from .harness import (
    PRESETS,
    ConvergenceReport,
    ExperimentPreset,
    HarnessError,
    fit_rate,
    run_preset,
    spatial_convergence_study,
    temporal_convergence_study,
)
from .linsolve import (
    FactoredOperator,
    SolveError,
    SparseOperator,
    assemble,
    factorize,
    solve,
)
from .ocp import (
    ProblemSpec,
    Solution,
    SweepConfig,
    backward_solve,
    control_from_adjoint,
    cost_functional,
    forward_solve,
    solve_monolithic_tiny,
    solve_ocp,
    uncontrolled_solve,
)
from .schemes import (
    NewtonConfig,
    StepError,
    StepReport,
    adjoint_step,
    f_eval,
    f_prime,
    f_tilde,
    s3_operator,
    state_step_s1,
    state_step_s2,
    state_step_s3,
)

__version__ = "0.1.0"

__all__ = [
    "Field",
    "GridError",
    "SpaceGrid",
    "TimeGrid",
    "Trajectory",
    "laplacian",
    "bilaplacian",
    "diff_backward",
    "inner_product",
    "norm_l2",
    "seminorm_h1",
    "seminorm_h2",
    "norm_max",
    "mass",
    "SparseOperator",
    "FactoredOperator",
    "SolveError",
    "assemble",
    "factorize",
    "solve",
    "NewtonConfig",
    "StepReport",
    "StepError",
    "f_eval",
    "f_prime",
    "f_tilde",
    "state_step_s1",
    "state_step_s2",
    "state_step_s3",
    "s3_operator",
    "adjoint_step",
    "ProblemSpec",
    "SweepConfig",
    "Solution",
    "forward_solve",
    "backward_solve",
    "solve_ocp",
    "solve_monolithic_tiny",
    "uncontrolled_solve",
    "cost_functional",
    "control_from_adjoint",
    "ParseError",
    "parse",
    "evaluate",
    "pretty",
    "ConvergenceReport",
    "ExperimentPreset",
    "HarnessError",
    "PRESETS",
    "fit_rate",
    "run_preset",
    "temporal_convergence_study",
    "spatial_convergence_study",
    "__version__",
]
