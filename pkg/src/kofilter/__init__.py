"""Fixed-X knockoff filter with composite-null extensions.

Builds knockoff designs, runs OLS/LASSO-based antisymmetric statistics
through the knockoff+ threshold, and provides the composite-null machinery:
shifted OLS, feature-response product perturbation, shifted-LASSO heuristics,
a composite-BH baseline, the naive-selection FDR ceiling, and a seeded
Monte-Carlo harness.
"""

from ._kernels import USING_COMPILED
from .errors import (
    AssertionFailure,
    ConvergenceFailure,
    DimensionError,
    InfeasibleS,
    InvalidEpsilon,
    InvalidGrid,
    KofilterError,
    NotPositiveSemiDefinite,
    RankDeficient,
    ZeroColumn,
)
from .estimators import (
    EstimatePair,
    FrppNoise,
    frpp_estimate,
    frpp_perturb,
    lasso_augmented,
    ols_augmented,
    shift_estimates,
)
from .inference import (
    BoundInput,
    SelectionOutcome,
    StatVector,
    composite_bh,
    knockoff_threshold,
    naive_fdr_bound,
    stat_diff,
    stat_lcd,
    stat_signed_max,
)
from .knockoff import Equicorrelated, ExplicitS, KnockoffModel, build_knockoffs, check_ols_feasible
from .linalg import (
    cholesky,
    gram,
    min_eigenvalue,
    normalize_columns,
    orthonormal_complement,
    solve_spd,
)
from .simbench import (
    MethodSpec,
    SimConfig,
    SweepResult,
    TrialMetrics,
    generate_coefficients,
    generate_design,
    run_sweep,
    run_trial,
    select_on_data,
    verify_lemma_frp_mean,
    verify_ratio_bound,
    verify_sign_property,
)

__version__ = "0.1.0"

__all__ = [
    "AssertionFailure",
    "BoundInput",
    "ConvergenceFailure",
    "DimensionError",
    "Equicorrelated",
    "EstimatePair",
    "ExplicitS",
    "FrppNoise",
    "InfeasibleS",
    "InvalidEpsilon",
    "InvalidGrid",
    "KnockoffModel",
    "KofilterError",
    "MethodSpec",
    "NotPositiveSemiDefinite",
    "RankDeficient",
    "SelectionOutcome",
    "SimConfig",
    "StatVector",
    "SweepResult",
    "TrialMetrics",
    "USING_COMPILED",
    "ZeroColumn",
    "build_knockoffs",
    "check_ols_feasible",
    "cholesky",
    "composite_bh",
    "frpp_estimate",
    "frpp_perturb",
    "generate_coefficients",
    "generate_design",
    "gram",
    "knockoff_threshold",
    "lasso_augmented",
    "min_eigenvalue",
    "naive_fdr_bound",
    "normalize_columns",
    "ols_augmented",
    "orthonormal_complement",
    "run_sweep",
    "run_trial",
    "select_on_data",
    "shift_estimates",
    "solve_spd",
    "stat_diff",
    "stat_lcd",
    "stat_signed_max",
    "verify_lemma_frp_mean",
    "verify_ratio_bound",
    "verify_sign_property",
]
