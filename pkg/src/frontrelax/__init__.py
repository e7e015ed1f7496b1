"""Desk-scale measurement of relaxation rates for planar reaction-diffusion fronts.

The package computes traveling fronts, the spectral structure of their
linearization, the self-similar transverse semigroup, phase/radiation
decompositions of perturbed fronts, full moving-frame evolution, and the
decay exponents and asymptotic profiles of the relaxation.
"""

from .errors import (
    AssumptionError,
    ConfigError,
    ConvergenceError,
    DegenerateDenominatorError,
    FrontrelaxError,
    InputError,
    ReportError,
    SingularityError,
    StabilityError,
    ValidityError,
)
from .grids import Grid1D, TransverseGrid
from .reaction import (
    ExactFront,
    ReactionModel,
    bistable_model,
    double_bistable_model,
    eval_reaction,
    eval_taylor_error,
    model_from_config,
    polynomial_model,
)
from .profile import WaveProfile, exact_bistable_profile, profile_residual, solve_profile
from .spectral import (
    DiscreteOperator1D,
    SpectralData1D,
    apply_semigroup_L1,
    assemble_L1,
    compute_adjoint_zero_mode,
    eigenvalues_L1,
    project_P0,
    project_Q0,
    resolvent_norm_sup,
    resolvent_norm_sweep,
    semigroup_trajectory,
    solve_L1_inverse_Q0,
)
from .scaling import (
    BoundReport,
    WeightedNormSpec,
    a_of_tau,
    apply_semigroup_Leta,
    check_integral_bounds,
    gaussian_G,
    project_P0_eta,
    project_Q0_eta,
    random_localized_field,
    verify_semigroup_bound,
    weighted_norm,
)
from .decomposition import (
    DecompositionResult,
    Field,
    ProfileInterpolant,
    decompose,
    recompose,
)
from .evolution import (
    EvolutionConfig,
    Snapshot,
    Trajectory,
    eval_nonlinearities,
    evolve,
    geometric_ladder,
    make_initial_data,
    make_transverse_bump,
    step,
)
from .rates import (
    RateFit,
    ScalingDecomposition,
    fit_decay_rate,
    from_scaling_variables,
    grad_sigma_profile_error,
    scaling_decompose,
    sigma_profile_error,
    to_scaling_variables,
    v_profile_error,
)
from .cli import ExperimentConfig, ExperimentResult, emit_report, run_experiment

__version__ = "0.1.0"
