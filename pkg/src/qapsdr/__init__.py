"""Semidefinite relaxations of the quadratic assignment problem.

Two relaxations of min |A P - P C|_F^2 over permutation matrices, an
operator-splitting solver for both, dual certificates with independent
verification, a deterministic exactness condition, and a sweep harness
for phase-transition experiments.
"""

from .errors import (
    InvalidInput,
    InvariantViolation,
    IoError,
    KernelMismatch,
    QapError,
    SizeLimit,
    WindowViolation,
)
from .linalg import (
    Spectrum,
    SymMatrix,
    as_sym_array,
    complement_basis,
    kron,
    lambda2_restricted,
    matz,
    operator_norm,
    psd_project,
    restricted_min_eig,
    sym_eig,
    vec,
)
from .instances import (
    ModelMeta,
    Permutation,
    QapInstance,
    apply_model,
    brute_force_qap,
    derive_seed,
    gen_correlated_wigner,
    gen_diag_gaussian,
    gen_diag_plus_wigner,
    instance_from_dict,
    instance_to_dict,
    qap_objective,
    stream,
)
from .formulation import (
    ConstraintSystem,
    CostVariant,
    SdrVariant,
    bordered_lift,
    build_constraints,
    build_cost,
    correlation,
    is_exact,
    mat_diag,
    round_to_permutation,
)
from .solver import (
    SdpProblem,
    SolverResult,
    SolverSettings,
    barycenter_start,
    residual_report,
    solve,
)
from .certificates import (
    ConditionReport,
    DualCertificate,
    KktReport,
    assemble_S,
    check_exactness_condition,
    construct_certificate_sdr1,
    construct_certificate_sdr2,
    default_t,
    delta_in_truth_frame,
    lambda2_bound,
    lemma_supp_check,
    noise_free_lambda2,
    verify_kkt,
    verify_kkt_sdr1,
    verify_kkt_sdr2,
)
from .harness import (
    SigmaSummary,
    SweepConfig,
    TrialRecord,
    aggregate,
    emit_plot,
    read_csv,
    run_sweep,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "QapError", "InvalidInput", "SizeLimit", "KernelMismatch",
    "InvariantViolation", "WindowViolation", "IoError",
    "SymMatrix", "Spectrum", "as_sym_array", "sym_eig", "psd_project",
    "vec", "matz", "kron", "complement_basis", "lambda2_restricted",
    "restricted_min_eig", "operator_norm",
    "Permutation", "ModelMeta", "QapInstance", "derive_seed", "stream",
    "apply_model", "gen_diag_gaussian", "gen_diag_plus_wigner",
    "gen_correlated_wigner", "qap_objective", "brute_force_qap",
    "instance_to_dict", "instance_from_dict",
    "CostVariant", "SdrVariant", "ConstraintSystem", "build_cost",
    "build_constraints", "mat_diag", "bordered_lift", "correlation",
    "is_exact", "round_to_permutation",
    "SolverSettings", "SdpProblem", "SolverResult", "solve",
    "barycenter_start", "residual_report",
    "ConditionReport", "DualCertificate", "KktReport", "assemble_S",
    "check_exactness_condition", "construct_certificate_sdr1",
    "construct_certificate_sdr2", "default_t", "delta_in_truth_frame",
    "lambda2_bound", "lemma_supp_check", "noise_free_lambda2",
    "verify_kkt", "verify_kkt_sdr1", "verify_kkt_sdr2",
    "SweepConfig", "TrialRecord", "SigmaSummary", "run_sweep", "aggregate",
    "write_csv", "read_csv", "emit_plot",
]
