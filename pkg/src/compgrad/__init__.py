"""Competitive-gradient solvers and analysis for smooth two-player zero-sum games."""

from .analysis import (
    COHERENT_NONSTRICT,
    NULL_COHERENT,
    STRICTLY_COHERENT,
    VIOLATED,
    CoherenceReport,
    DiscreteRateReport,
    EtaMax,
    LinearStepMap,
    OcgoBounds,
    SpectralSummary,
    SviReport,
    discrete_rate_report,
    linear_step_matrix,
    mvi_probe,
    ocgo_param_bounds,
    rate_continuous,
    rate_discrete,
    robbins_monro_schedule,
    spectral_summary,
    svi_residual,
)
from .competitive import (
    CompetitiveGradient,
    ProximalResult,
    SolveSettings,
    bregman_divergence,
    competitive_gradient,
    proximal_map,
)
from .errors import (
    CompgradError,
    ConfigError,
    DimensionError,
    EvaluationError,
    SolveError,
    SolverRunError,
    UnsupportedProblemError,
)
from .problems import (
    BilinearProblem,
    ConsistencyReport,
    FiniteDifferenceProblem,
    IteratePoint,
    LipschitzConstants,
    ProblemOracle,
    QuadraticScalarProblem,
    check_oracle_consistency,
    make_bilinear,
    make_finite_difference_oracle,
    make_quadratic_family,
    make_random_bilinear,
    problem_from_config,
)
from .solvers import (
    ALGORITHMS,
    CONVERGED,
    DIVERGED,
    MAX_ITERS,
    SolverConfig,
    StepSchedule,
    Trajectory,
    cgd_step,
    cgo_step,
    constant_schedule,
    gda_step,
    integrate_flow,
    ocgo_step,
    omda_step,
    run_solver,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
