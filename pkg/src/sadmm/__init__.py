"""Accelerated symmetric ADMM for sparse-regularized constrained problems."""

from .core import (
    GMetric,
    ProblemInstance,
    g_metric_norm_sq,
    smallest_positive_eigenvalue,
    spectral_norm,
)
from .diagnostics import (
    AuditReport,
    RateBoundReport,
    TraceRecord,
    ZetaConstants,
    audit_descent,
    audit_rate_bounds,
    augmented_lagrangian,
    default_lower_bound,
    stationarity_gap,
    tilde_lagrangian,
    zeta_constants,
)
from .problems import (
    DoaSpec,
    SparseRecoverySpec,
    doa_grid,
    doa_spectrum,
    gen_doa,
    gen_logistic_erm,
    gen_sparse_recovery,
    l2_error,
    load_instance,
    real_embedding,
    save_instance,
    steering_matrix,
)
from .prox import (
    half_shrinkage,
    half_shrinkage_threshold,
    scalar_prox_oracle,
    soft_threshold,
)
from .solver import (
    IterateState,
    SolverConfig,
    SolveSummary,
    StepOutput,
    adaptive_beta,
    build_metric,
    compliant_beta,
    nesterov_gamma_step,
    residuals,
    sadmm_step,
    solve,
    stopping_ire,
    x_update,
    y_update,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
