"""Numerical solver suite for a 1-D glucose-insulin transport model.

Convection-reaction transport of glucose and insulin along the pancreatic
vein with proportional end-to-end boundary coupling: homogeneous equilibria,
steady spatial profiles (with and without small diffusion), linear stability
verdicts, explicit time evolution, and singular-perturbation comparisons.
"""
from .errors import (
    BracketError,
    ConditioningError,
    DegenerateQuadraticError,
    DivergenceError,
    DomainError,
    IntegrationFailureError,
    InvalidArgumentError,
    ModeError,
    NonConvergenceError,
    PanveinError,
    ParameterRegimeError,
    ProfileValidityError,
    SingularMatrixError,
    StepSizeError,
    StrictParseError,
    ValidationError,
)
from .evolution import (
    EvolutionState,
    EvolutionTrace,
    cfl_limit,
    run_to_steady,
    semigroup_contraction_check,
    step,
)
from .model import (
    EquilibriumReport,
    ModelParams,
    SigmaProfile,
    find_equilibrium,
    nonlinearity_gain,
    reaction_rhs,
    remainder_F,
    sigma_eval,
)
from .numerics import (
    Grid,
    exp_convolve,
    find_root_bracketed,
    mat_exp,
    newton_nd,
    quad_trapz,
    rk4_step,
    spectral_norm,
)
from .runner import (
    ScenarioConfig,
    ScenarioResult,
    echo_config,
    emit_profiles,
    load_config,
    parse_config,
    run,
)
from .stability import (
    StabilityReport,
    assess_stability,
    linearized_matrix,
    quadratic_roots,
    solve_stability_quadratic,
    transfer_matrix,
    verdict,
)
from .steady_diffusion import (
    BlockSet,
    EpsSteadyProfile,
    build_blocks,
    eps_sweep,
    perturbation_gap_forced,
    perturbation_gap_linear,
    solve_eps_block,
    solve_eps_collocation,
)
from .steady_transport import (
    ContractionCertificate,
    SteadyProfile,
    compatibility_residuals,
    contraction_certificate,
    integrate_ivp,
    picard_linear_part,
    solve_picard,
    solve_shooting,
    uniqueness_bound,
)

__version__ = "0.1.0"
