"""kolkit: numerical verification toolkit for a kinetic diffusion equation.

The model is a density f(t, x, v) transported by velocity and diffused in
velocity only, with a merely measurable, uniformly elliptic diffusion
coefficient.  The package measures, on grid runs, the structural facts that
hold at that roughness: invariance under the kinetic group and scaling,
two-sided kernel envelopes, a weighted-log positivity functional, level-set
decay of supersolutions, discrete near-diagonal chains with perturbation
stability, and endpoint-pinned trajectory families with critical endpoint
sensitivity.
"""

from .phase_geometry import (
    NormalizedGap,
    PhasePoint,
    compose,
    inverse,
    normalize_gap,
    scale_point,
)
from .profiles import (
    EllipticityBounds,
    FitError,
    FitReport,
    ProfileConstants,
    explicit_kernel,
    explicit_kernel_grid,
    explicit_kernel_mollified,
    fit_envelope,
    kinetic_exponent,
    lower_profile,
    upper_profile,
)
from .coefficients import (
    CoefficientField,
    EllipticityReport,
    EllipticityViolation,
    SamplingSpec,
    dilated_field,
    make_field,
    measure_ellipticity,
    reversed_flipped_field,
)
from .solver import (
    ConfigError,
    EvolveResult,
    Field,
    Grid,
    KernelEstimate,
    SolverConfig,
    SolverError,
    chapman_kolmogorov_residual,
    diagnostics,
    estimate_kernel,
    evolve,
    init_delta,
    remollify,
    scaling_identity_residual,
    step,
)
from .nash_g import (
    DomainError,
    GWeight,
    GoodSetMeasures,
    LevelSetReport,
    SpaceTimeField,
    adjoint_kernel_residual,
    default_s_grid,
    g_floor_sensitivity,
    g_functional,
    good_set_measures,
    level_set_statistic,
    log_mean_c,
    mass_in_ball,
)
from .chains import (
    ChainConstructionError,
    ChainSpec,
    NearDiagonalParams,
    box_volume_factor,
    build_chain,
    chain_lower_bound,
    default_k0,
    near_diagonal_check,
    near_diagonal_kernel_min,
    perturbation_check,
    validate_chain,
    verify_chain_against_kernel,
)
from .trajectories import (
    CheckTolerances,
    PropertyReport,
    TrajectoryFamily,
    check_properties,
    criticality_exponents,
    default_r_grid,
    eval_trajectory,
    log_oscillatory_family,
    straight_family,
)

__version__ = "0.1.0"

__all__ = [
    "PhasePoint",
    "NormalizedGap",
    "compose",
    "inverse",
    "scale_point",
    "normalize_gap",
    "EllipticityBounds",
    "ProfileConstants",
    "FitReport",
    "FitError",
    "kinetic_exponent",
    "upper_profile",
    "lower_profile",
    "explicit_kernel",
    "explicit_kernel_grid",
    "explicit_kernel_mollified",
    "fit_envelope",
    "CoefficientField",
    "EllipticityReport",
    "EllipticityViolation",
    "SamplingSpec",
    "make_field",
    "measure_ellipticity",
    "dilated_field",
    "reversed_flipped_field",
    "Grid",
    "Field",
    "SolverConfig",
    "ConfigError",
    "SolverError",
    "EvolveResult",
    "KernelEstimate",
    "init_delta",
    "step",
    "evolve",
    "estimate_kernel",
    "diagnostics",
    "remollify",
    "chapman_kolmogorov_residual",
    "scaling_identity_residual",
    "DomainError",
    "GWeight",
    "GoodSetMeasures",
    "LevelSetReport",
    "SpaceTimeField",
    "g_functional",
    "g_floor_sensitivity",
    "log_mean_c",
    "default_s_grid",
    "level_set_statistic",
    "good_set_measures",
    "mass_in_ball",
    "adjoint_kernel_residual",
    "NearDiagonalParams",
    "ChainSpec",
    "ChainConstructionError",
    "default_k0",
    "near_diagonal_check",
    "build_chain",
    "validate_chain",
    "perturbation_check",
    "box_volume_factor",
    "chain_lower_bound",
    "near_diagonal_kernel_min",
    "verify_chain_against_kernel",
    "TrajectoryFamily",
    "CheckTolerances",
    "PropertyReport",
    "straight_family",
    "log_oscillatory_family",
    "default_r_grid",
    "eval_trajectory",
    "check_properties",
    "criticality_exponents",
    "__version__",
]
