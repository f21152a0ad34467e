"""toarstab: orthonormal bases of second-order Krylov subspaces, audited.

The package computes compact (two-level) Arnoldi decompositions of the
companion embedding of the recurrence ``r_i = A r_{i-1} + B r_{i-2}`` and
verifies its own numerical stability: it reconstructs the backward-error
objects (residual, projected error, recovered perturbations of A and B, and
the nearby second-order Krylov subspace) and checks the proved bounds,
including the effect of eigenvalue scaling.
"""

__version__ = "0.1.0"

from .arnoldi import ArnoldiDecomposition, arnoldi_run
from .audit import (
    BackwardError,
    RecoveredPerturbation,
    StabilityAudit,
    brute_force_second_order_basis,
    compute_residual,
    nearby_basis,
    project_backward_error,
    recover_companion,
    recovered_start_pair,
    run_audit,
    transformed_embedding_check,
)
from .companion import (
    CompanionOperator,
    ProblemPair,
    StartPair,
    assemble_companion,
    companion_norm,
    embed_start,
)
from .dense import (
    OrthonormalBasis,
    orthogonalize_against,
    orthonormality_defect,
    orthotol,
    pinv_apply_right,
    spectral_norm,
    subspace_distance,
)
from .errors import (
    AuditError,
    BreakdownError,
    DimensionMismatchError,
    MatrixMarketError,
    RankDeficiencyWarning,
    RankMismatchError,
)
from .generate import random_pair, random_start, rng_for
from .mmio import read_matrix_market, write_matrix_market
from .scaling import (
    ScalingPlan,
    alpha_opt,
    classify_regime,
    f_alpha,
    make_plan,
    scaled_start,
    unscale_report,
)
from .toar import ToarDecomposition, toar_init, toar_run, toar_step, validate_decomposition

__all__ = [
    "__version__",
    "ArnoldiDecomposition",
    "arnoldi_run",
    "BackwardError",
    "RecoveredPerturbation",
    "StabilityAudit",
    "brute_force_second_order_basis",
    "compute_residual",
    "nearby_basis",
    "project_backward_error",
    "recover_companion",
    "recovered_start_pair",
    "run_audit",
    "transformed_embedding_check",
    "CompanionOperator",
    "ProblemPair",
    "StartPair",
    "assemble_companion",
    "companion_norm",
    "embed_start",
    "OrthonormalBasis",
    "orthogonalize_against",
    "orthonormality_defect",
    "orthotol",
    "pinv_apply_right",
    "spectral_norm",
    "subspace_distance",
    "AuditError",
    "BreakdownError",
    "DimensionMismatchError",
    "MatrixMarketError",
    "RankDeficiencyWarning",
    "RankMismatchError",
    "random_pair",
    "random_start",
    "rng_for",
    "read_matrix_market",
    "write_matrix_market",
    "ScalingPlan",
    "alpha_opt",
    "classify_regime",
    "f_alpha",
    "make_plan",
    "scaled_start",
    "unscale_report",
    "ToarDecomposition",
    "toar_init",
    "toar_run",
    "toar_step",
    "validate_decomposition",
]
