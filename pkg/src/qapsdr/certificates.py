"""Optimality machinery: deterministic exactness test and dual certificates.

All constructions live in the identity frame: the hidden permutation is
assumed to be the identity, so the planted lift is x = vec(I).  Instances
with a different hidden truth are conjugated into this frame first
(:func:`delta_in_truth_frame`).

The central objects, for signal A and noise Delta with sum C = A + Delta:

* the lifted cost M = (I (x) A - C (x) I)^2,
* four dual blocks T, K, Z, H assembled into
  S = T (x) I + I (x) K + J (x) H + Z (x) J,
* the nonnegativity dual B = ((M - S) x x' + x x' (M - S)) / n,
* the cone dual Q = Pi (M - S) Pi with Pi = I - x x' / n.

The scalar c inside T must dominate twice every off-diagonal entry of
A Delta for B to be entrywise nonnegative; it is chosen as exactly that
maximum, clamped at zero.  (Stating the requirement through a minimum
flips the inequality and breaks nonnegativity whenever A Delta has a
positive off-diagonal entry.)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInput, InvariantViolation, WindowViolation
from .instances import QapInstance
from .linalg import (
    Spectrum,
    as_sym_array,
    complement_basis,
    kron,
    matz,
    operator_norm,
    restricted_min_eig,
    sym_eig,
    vec,
)

# Constructors refuse to return a certificate whose defining identities
# miss by more than these absolute residuals.
EQ_DIAG_TOL = 1e-10
EQ_STATIONARITY_TOL = 1e-9

# KktReport.passes thresholds.
B_NONNEG_TOL = 1e-8
B_SUPPORT_TOL = 1e-8
Q_KERNEL_TOL = 1e-6
LAMBDA2_TOL = 1e-8


@dataclass(frozen=True)
class ConditionReport:
    """Both sides of the deterministic exactness inequality."""

    lhs: float
    rhs: float
    holds: bool
    margin: float
    spectrum: Spectrum


@dataclass
class DualCertificate:
    T: np.ndarray
    K: np.ndarray
    Z: np.ndarray
    H: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    S: np.ndarray
    t: float
    c: float
    variant: str  # "I" or "II"
    sdr2_extras: Optional[dict] = None


@dataclass(frozen=True)
class KktReport:
    b_nonneg_min: float
    b_support_violation: float
    q_kernel_residual: float
    lambda2_Q: float
    passes: bool
    variant: str


def ddiag(X) -> np.ndarray:
    """Zero out everything off the diagonal."""
    return np.diag(np.diag(np.asarray(X, dtype=float)))


def default_t(A, n: int) -> float:
    """The concrete 'sufficiently large' shift: 100 (|A|^2 + n).

    |A| is the operator norm.  Empirically this saturates the second
    eigenvalue of the certificate to within about 1e-4 of its limit at
    the supported sizes while keeping conditioning manageable.
    """
    return 100.0 * (operator_norm(A) ** 2 + n)


def check_exactness_condition(A, Delta) -> ConditionReport:
    """Evaluate the deterministic exactness inequality.

    lhs: (smallest eigenvalue gap)^2 times (smallest squared alignment of
    an eigenvector with the ones vector); rhs: n (|Delta| |A| + max
    absolute entry of A Delta).  ``holds`` means lhs >= rhs, which
    certifies that both relaxations recover the planted lift.
    """
    Aa = as_sym_array(A)
    Dd = as_sym_array(Delta)
    if Aa.shape != Dd.shape:
        raise InvalidInput("signal and noise dimensions disagree")
    n = Aa.shape[0]
    spec = sym_eig(Aa)
    lhs = spec.min_gap**2 * spec.min_alignment_sq
    rhs = n * (operator_norm(Dd) * operator_norm(Aa) + np.max(np.abs(Aa @ Dd)))
    return ConditionReport(
        lhs=float(lhs), rhs=float(rhs), holds=bool(lhs >= rhs),
        margin=float(lhs - rhs), spectrum=spec,
    )


def assemble_S(T, K, Z, H, n: int) -> np.ndarray:
    """Dense dual aggregate S = T (x) I + I (x) K + J (x) H + Z (x) J."""
    I = np.eye(n)
    J = np.ones((n, n))
    return kron(T, I) + kron(I, K) + kron(J, H) + kron(Z, J)


def sx_fold(T, K, Z, H) -> np.ndarray:
    """Closed form of mat(S x) at x = vec(I): T + J Z + K + H J.

    Valid for symmetric T and Z, which is the only case used here.
    """
    n = np.asarray(T).shape[0]
    J = np.ones((n, n))
    return np.asarray(T) + J @ np.asarray(Z) + np.asarray(K) + np.asarray(H) @ J


def choose_c(A, Delta) -> float:
    """Smallest nonnegative c making the nonnegativity dual valid.

    The off-diagonal entries of mat((M - S) x) are c - 2 (A Delta)_{ij},
    so c must reach twice the largest off-diagonal entry of A Delta.
    """
    AD = as_sym_array(A) @ as_sym_array(Delta)
    n = AD.shape[0]
    off = AD[~np.eye(n, dtype=bool)]
    return float(max(0.0, 2.0 * np.max(off)))


def _blocks(A, Delta, t, c):
    Aa = as_sym_array(A)
    Dd = as_sym_array(Delta)
    n = Aa.shape[0]
    J = np.ones((n, n))
    I = np.eye(n)
    AD = Aa @ Dd
    T = -t * J + Dd @ Dd + Dd @ Aa + AD - 2.0 * ddiag(AD) - c * (J - I)
    K = -t * J
    H = t * J / n
    Z = t * J / n
    return T, K, Z, H


def build_cost_identity_frame(A, Delta) -> np.ndarray:
    """Lifted cost for the identity-frame pair (A, C = A + Delta)."""
    Aa = as_sym_array(A)
    Dd = as_sym_array(Delta)
    n = Aa.shape[0]
    D = kron(np.eye(n), Aa) - kron(Aa + Dd, np.eye(n))
    return D @ D


def _check(identity: str, residual: float, tol: float):
    if not residual <= tol:
        raise InvariantViolation(identity, residual)


def construct_certificate_sdr1(A, Delta, t: Optional[float] = None) -> DualCertificate:
    """Build the SDR I dual certificate and verify its identities.

    The certificate is valid (its verifier passes) exactly when the
    second eigenvalue of Q is nonnegative; the construction itself goes
    through for any symmetric inputs.
    """
    Aa = as_sym_array(A)
    Dd = as_sym_array(Delta)
    if Aa.shape != Dd.shape:
        raise InvalidInput("signal and noise dimensions disagree")
    n = Aa.shape[0]
    if t is None:
        t = default_t(Aa, n)
    if t <= 0:
        raise InvalidInput("the shift t must be positive")
    c = choose_c(Aa, Dd)
    T, K, Z, H = _blocks(Aa, Dd, t, c)
    S = assemble_S(T, K, Z, H, n)
    M = build_cost_identity_frame(Aa, Dd)
    x = vec(np.eye(n))
    MS = M - S
    xxT = np.outer(x, x)
    B = (MS @ xxT + xxT @ MS) / n
    Pi = np.eye(n * n) - xxT / n
    Q = Pi @ MS @ Pi
    Q = 0.5 * (Q + Q.T)

    # the three defining identities, all recomputed on the assembled blocks
    _check(
        "diag(T+K) + (Z+H) 1 == diag(Delta^2)",
        float(np.max(np.abs(np.diag(T + K) + (Z + H) @ np.ones(n) - np.diag(Dd @ Dd)))),
        EQ_DIAG_TOL,
    )
    _check(
        "B x == (M - S) x",
        float(np.max(np.abs(B @ x - MS @ x))),
        EQ_STATIONARITY_TOL * max(1.0, t),
    )
    _check(
        "M - S == B + Q",
        float(np.max(np.abs(MS - B - Q))),
        EQ_STATIONARITY_TOL * max(1.0, t),
    )
    return DualCertificate(T=T, K=K, Z=Z, H=H, B=B, Q=Q, S=S, t=float(t), c=c,
                           variant="I")


def verify_kkt_sdr1(cert: DualCertificate, M, n: int) -> KktReport:
    """Recheck the four optimality conditions from the raw matrices.

    Nothing is trusted from the constructor: nonnegativity and support of
    B, the kernel residual of Q, and the second eigenvalue are all
    recomputed here, so this doubles as the constructor's test oracle.
    """
    x = vec(np.eye(n))
    B = np.asarray(cert.B)
    Q = np.asarray(cert.Q)
    b_min = float(B.min())
    b_supp = float(np.max(np.abs(B * np.outer(x, x))))
    q_res = float(np.linalg.norm(Q @ x))
    lam2 = restricted_min_eig(Q, complement_basis(x))
    passes = (
        b_min >= -B_NONNEG_TOL
        and b_supp <= B_SUPPORT_TOL
        and q_res <= Q_KERNEL_TOL
        and lam2 >= -LAMBDA2_TOL
    )
    return KktReport(
        b_nonneg_min=b_min, b_support_violation=b_supp, q_kernel_residual=q_res,
        lambda2_Q=float(lam2), passes=bool(passes), variant="I",
    )


def lambda2_bound(A, Delta) -> float:
    """Closed-form lower bound on the certificate's second eigenvalue.

    (2/n) gap^2 alignment^2 - 2 |Delta| |A| - 2 |A Delta|_max.  Positive
    values certify exactness outright; the bound is tight in the large-t
    limit for perfectly aligned diagonal signals.
    """
    Aa = as_sym_array(A)
    Dd = as_sym_array(Delta)
    n = Aa.shape[0]
    spec = sym_eig(Aa)
    return float(
        (2.0 / n) * spec.min_gap**2 * spec.min_alignment_sq
        - 2.0 * operator_norm(Dd) * operator_norm(Aa)
        - 2.0 * np.max(np.abs(Aa @ Dd))
    )


def construct_certificate_sdr2(
    A, Delta, t: Optional[float] = None, t_prime: Optional[float] = None
) -> DualCertificate:
    """Certificate for the bordered relaxation.

    Reuses the SDR I blocks and spends the extra dual freedom on constant
    multiplier vectors mu = lambda = t' 1.  The shift t' must sit in the
    open window (0, lambda2 / 2), where lambda2 belongs to the SDR I
    certificate; the default is the window midpoint lambda2 / 4.  Inside
    the window Q is positive definite, which certifies uniqueness.
    """
    base = construct_certificate_sdr1(A, Delta, t)
    n = base.T.shape[0]
    n2 = n * n
    x = vec(np.eye(n))
    lam2 = restricted_min_eig(base.Q, complement_basis(x))
    hi = lam2 / 2.0
    if t_prime is None:
        if hi <= 0:
            raise WindowViolation(0.0, 0.0, max(hi, 0.0))
        t_prime = lam2 / 4.0
    if not (0.0 < t_prime < hi):
        raise WindowViolation(t_prime, 0.0, max(hi, 0.0))

    dx = np.diag(x)
    Q = base.Q - 2.0 * t_prime * (np.eye(n2) - dx) + 2.0 * t_prime * dx
    q = -Q @ x
    z = float(-q @ x)
    mu = np.full(n, t_prime)
    lam = np.full(n, t_prime)
    # Lambda = I (x) diag(mu) + diag(lambda) (x) I collapses to 2 t' I here
    Lam = kron(np.eye(n), np.diag(mu)) + kron(np.diag(lam), np.eye(n))

    M = build_cost_identity_frame(A, Delta)
    _check(
        "mat(Lambda x) == diag(lambda + mu)",
        float(np.max(np.abs(matz(Lam @ x) - np.diag(lam + mu)))),
        1e-12 * max(1.0, float(t_prime)),
    )
    _check(
        "M == Q + 2 diag(q) + B + Lambda + S",
        float(np.max(np.abs(M - (Q + 2.0 * np.diag(q) + base.B + Lam + base.S)))),
        EQ_STATIONARITY_TOL * max(1.0, base.t),
    )
    return DualCertificate(
        T=base.T, K=base.K, Z=base.Z, H=base.H, B=base.B, Q=Q, S=base.S,
        t=base.t, c=base.c, variant="II",
        sdr2_extras={"mu": mu, "lam": lam, "q": q, "z": z, "t_prime": float(t_prime)},
    )


def _bordered_dual(cert: DualCertificate) -> np.ndarray:
    q = cert.sdr2_extras["q"]
    z = cert.sdr2_extras["z"]
    m = cert.Q.shape[0]
    out = np.zeros((m + 1, m + 1))
    out[:m, :m] = cert.Q
    out[:m, m] = q
    out[m, :m] = q
    out[m, m] = z
    return out


def verify_kkt_sdr2(cert: DualCertificate, M, n: int) -> KktReport:
    """Optimality recheck for the bordered variant.

    The dual cone membership concerns [[Q, q], [q', z]], whose kernel at
    optimality contains [x; 1]; the kernel residual and the restricted
    second eigenvalue are measured on that bordered matrix.
    """
    if cert.sdr2_extras is None:
        raise InvalidInput("certificate carries no bordered-variant data")
    x = vec(np.eye(n))
    B = np.asarray(cert.B)
    b_min = float(B.min())
    b_supp = float(np.max(np.abs(B * np.outer(x, x))))
    bordered = _bordered_dual(cert)
    v = np.concatenate([x, [1.0]])
    q_res = float(np.linalg.norm(bordered @ v))
    lam2 = restricted_min_eig(bordered, complement_basis(v))
    passes = (
        b_min >= -B_NONNEG_TOL
        and b_supp <= B_SUPPORT_TOL
        and q_res <= Q_KERNEL_TOL
        and lam2 >= -LAMBDA2_TOL
    )
    return KktReport(
        b_nonneg_min=b_min, b_support_violation=b_supp, q_kernel_residual=q_res,
        lambda2_Q=float(lam2), passes=bool(passes), variant="II",
    )


def verify_kkt(cert: DualCertificate, M, n: int) -> KktReport:
    if cert.variant == "II":
        return verify_kkt_sdr2(cert, M, n)
    return verify_kkt_sdr1(cert, M, n)


def mean_projector_square(n: int) -> np.ndarray:
    """The projector (P (x) I - I (x) P)^2 with P = J/n; annihilates vec(I)."""
    I = np.eye(n)
    P = np.ones((n, n)) / n
    D = kron(P, I) - kron(I, P)
    return D @ D


def noise_free_lambda2(A, t: float):
    """Second eigenvalue of the noise-free certificate and its closed bound.

    Assembles Q = M + n t Pbar directly (noise-free S equals -n t Pbar)
    and returns (lambda2_numeric, (2/n) gap^2 alignment^2).  The numeric
    value approaches the bound from below as t grows for perfectly
    aligned diagonal signals, at rate O(1/t); the bound is a limit, not a
    finite-t guarantee.
    """
    Aa = as_sym_array(A)
    if t <= 0:
        raise InvalidInput("the shift t must be positive")
    n = Aa.shape[0]
    I = np.eye(n)
    M0 = kron(I, Aa) - kron(Aa, I)
    Q = M0 @ M0 + n * t * mean_projector_square(n)
    x = vec(I)
    lam2 = restricted_min_eig(Q, complement_basis(x))
    spec = sym_eig(Aa)
    bound = (2.0 / n) * spec.min_gap**2 * spec.min_alignment_sq
    return float(lam2), float(bound)


def eigenvector_lift(A) -> np.ndarray:
    """Columns u_i (x) u_i: the kernel basis of the noise-free cost."""
    spec = sym_eig(A)
    U = spec.eigenvectors
    return np.column_stack([np.kron(U[:, i], U[:, i]) for i in range(U.shape[1])])


def lemma_supp_check(A_mat, P_big, P_small, t: float, c: float):
    """Numeric check of the projector comparison lemma.

    Preconditions: range(P_small) inside range(P_big), and A at least c on
    range(P_big - P_small).  Verifies that P_big A P_big + t P_small
    dominates 0.9 c on range(P_big); returns (holds, measured minimum).
    """
    Aa = as_sym_array(A_mat)
    Pb = as_sym_array(P_big)
    Ps = as_sym_array(P_small)
    m = Aa.shape[0]
    if float(np.max(np.abs(Ps @ (np.eye(m) - Pb)))) > 1e-10:
        raise InvalidInput("range(P_small) is not contained in range(P_big)")
    wd, Vd = np.linalg.eigh(Pb - Ps)
    diff_basis = Vd[:, wd > 0.5]
    if diff_basis.shape[1] > 0:
        gap_min = restricted_min_eig((Pb - Ps) @ Aa @ (Pb - Ps), diff_basis)
        if gap_min < c - 1e-8 * max(1.0, abs(c)):
            raise InvalidInput(
                f"A is only {gap_min:.6g} on range(P_big - P_small), below c = {c:.6g}"
            )
    wb, Vb = np.linalg.eigh(Pb)
    big_basis = Vb[:, wb > 0.5]
    measured = restricted_min_eig(Pb @ Aa @ Pb + t * Ps, big_basis)
    return bool(measured >= 0.9 * c), float(measured)


def delta_in_truth_frame(inst: QapInstance) -> np.ndarray:
    """Recover the noise matrix in the identity frame of an instance.

    With C = P' (A + Delta) P this is P C P' - A; instances without a
    recorded truth are taken to already live in the identity frame.
    """
    A = as_sym_array(inst.A)
    C = as_sym_array(inst.C)
    if inst.truth is None:
        return C - A
    P = inst.truth.matrix()
    return P @ C @ P.T - A
