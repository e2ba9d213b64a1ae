"""Robust MPC for linear systems with interval-matrix model uncertainty."""

from .sets import (
    IntervalMatrix,
    MatrixZonotope,
    bounding_box,
    entrywise_decomposition,
    interval_product,
    interval_sum,
    left_matrix_product,
    right_matrix_product,
    t_operator,
    t_operator_iterated,
    zonotope_minkowski_sum,
)
from .bounds import (
    OfflineBounds,
    UncertainSystem,
    bounds_recursion,
    closed_loop_matrices,
    compute_bounds,
    compute_bounds_zonotope,
    error_term_recursion,
    load_bounds,
    save_bounds,
)
from .qp import QpProblem, QpSolution, solve_qp
from .ocp import (
    ConstraintSet,
    MpcConfig,
    OcpSolution,
    OcpSolverError,
    build_subproblem,
    constraint_violation,
    control_move,
    dump_qp,
    solve_ocp,
    subproblem_sizes,
    trajectory_cost,
)
from .terminal import (
    GainCheck,
    RpiReport,
    TemplateSet,
    falsify_rpi,
    synthesize_alpha,
    verify_gain_robust_schur,
    verify_rpi,
)
from .sim import (
    CandidateReport,
    Realization,
    SimLog,
    check_candidate_feasibility,
    feasible_domain_grid,
    run_closed_loop,
    sample_realization,
    shifted_candidate,
    terminal_candidate,
)
from .config import ConfigError, ExperimentConfig, load_config, save_config

__all__ = [
    "IntervalMatrix",
    "MatrixZonotope",
    "bounding_box",
    "entrywise_decomposition",
    "interval_product",
    "interval_sum",
    "left_matrix_product",
    "right_matrix_product",
    "t_operator",
    "t_operator_iterated",
    "zonotope_minkowski_sum",
    "OfflineBounds",
    "UncertainSystem",
    "bounds_recursion",
    "closed_loop_matrices",
    "compute_bounds",
    "compute_bounds_zonotope",
    "error_term_recursion",
    "load_bounds",
    "save_bounds",
    "QpProblem",
    "QpSolution",
    "solve_qp",
    "ConstraintSet",
    "MpcConfig",
    "OcpSolution",
    "OcpSolverError",
    "build_subproblem",
    "constraint_violation",
    "control_move",
    "dump_qp",
    "solve_ocp",
    "subproblem_sizes",
    "trajectory_cost",
    "GainCheck",
    "RpiReport",
    "TemplateSet",
    "falsify_rpi",
    "synthesize_alpha",
    "verify_gain_robust_schur",
    "verify_rpi",
    "CandidateReport",
    "Realization",
    "SimLog",
    "check_candidate_feasibility",
    "feasible_domain_grid",
    "run_closed_loop",
    "sample_realization",
    "shifted_candidate",
    "terminal_candidate",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "save_config",
]
