"""Operator-splitting solver for the two lifted relaxations.

Consensus ADMM with three blocks:

* an affine block projecting onto the row system (precomputed
  rank-tolerant pseudoinverse of the row Gram matrix),
* a cone block projecting onto the PSD cone, applied to X itself for
  SDR I and to the bordered lift of X for SDR II,
* an entrywise clip onto the nonnegative orthant.

The consensus update couples the blocks through the linear maps, so the
X step solves (k I + L* L) X = rhs, which is diagonal in the entries of
X for both variants.  Over-relaxation and residual-balancing penalty
adaptation follow the standard recipes.  A penalty update is only
accepted while the combined residual has not increased since the last
accepted update, which keeps that sequence monotone by construction.

Everything is deterministic: fixed inputs and settings reproduce the
iterate sequence bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInput
from .formulation import ConstraintSystem, SdrVariant, bordered_lift
from .linalg import matz, vec

# Affine rows overlap; Gram eigenvalues below this fraction of the largest
# are treated as exact redundancy and dropped from the pseudoinverse.
GRAM_DROP_TOL = 1e-10

STATUS_SOLVED = "Solved"
STATUS_MAX_ITERS = "MaxIters"
STATUS_NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class SolverSettings:
    tol_primal: float = 1e-7
    tol_dual: float = 1e-7
    max_iters: int = 50000
    penalty: float = 1.0
    adaptive_penalty: bool = True
    over_relaxation: float = 1.6
    seed: int = 0
    check_every: int = 25

    def __post_init__(self):
        if self.tol_primal <= 0 or self.tol_dual <= 0:
            raise InvalidInput("tolerances must be positive")
        if not (1.0 <= self.over_relaxation < 2.0):
            raise InvalidInput("over-relaxation factor must lie in [1, 2)")
        if self.max_iters < 1:
            raise InvalidInput("need at least one iteration")
        if self.penalty <= 0:
            raise InvalidInput("penalty must be positive")


@dataclass
class SdpProblem:
    cost: np.ndarray
    constraints: ConstraintSystem

    def __post_init__(self):
        self.cost = np.asarray(self.cost, dtype=float)
        d = self.constraints.n ** 2
        if self.cost.shape != (d, d):
            raise InvalidInput(
                f"cost shape {self.cost.shape} does not match dimension {d}"
            )
        if not np.allclose(self.cost, self.cost.T, atol=0, rtol=0):
            self.cost = 0.5 * (self.cost + self.cost.T)

    @property
    def dimension(self) -> int:
        return self.constraints.n ** 2


@dataclass
class SolverResult:
    X_hat: np.ndarray
    objective: float
    primal_residual: float
    dual_residual: float
    iterations: int
    status: str
    wall_time: float
    internals: dict = field(default_factory=dict, repr=False)


def barycenter_start(n: int) -> np.ndarray:
    """Average of all permutation lifts: feasible for both variants.

    Entry ((i, k), (j, l)) is 1/n when i == j and k == l, zero when exactly
    one index pair matches, and 1/(n (n - 1)) otherwise.
    """
    n2 = n * n
    X = np.full((n2, n2), 1.0 / (n * (n - 1)))
    idx = np.arange(n2)
    blk = idx // n
    inner = idx % n
    same_blk = blk[:, None] == blk[None, :]
    same_inner = inner[:, None] == inner[None, :]
    X[same_blk & ~same_inner] = 0.0
    X[~same_blk & same_inner] = 0.0
    X[same_blk & same_inner] = 1.0 / n
    return X


def _pinv_psd(G: np.ndarray, drop: float = GRAM_DROP_TOL) -> np.ndarray:
    w, V = np.linalg.eigh(G)
    cut = drop * max(w.max(), 1.0)
    inv = np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)
    return (V * inv) @ V.T


class _AffineProjector:
    """Orthogonal projection onto {X : rows vec(X) = rhs}."""

    def __init__(self, cons: ConstraintSystem):
        self.R = cons.rows.tocsr()
        self.RT = self.R.T.tocsr()
        self.b = cons.rhs
        self.Gp = _pinv_psd((self.R @ self.RT).toarray())
        self.n2 = cons.n ** 2

    def __call__(self, V: np.ndarray) -> np.ndarray:
        resid = self.R @ vec(V) - self.b
        return V - matz(self.RT @ (self.Gp @ resid))

    def dual_vector(self, U: np.ndarray) -> np.ndarray:
        """Least-squares row multipliers y with rows' y closest to U."""
        return self.Gp @ (self.R @ vec(U))


def _psd_clip(V: np.ndarray) -> np.ndarray:
    Vs = 0.5 * (V + V.T)
    w, P = np.linalg.eigh(Vs)
    return (P * np.maximum(w, 0.0)) @ P.T


def _lift0(X: np.ndarray) -> np.ndarray:
    """Bordered lift without the constant corner."""
    L = bordered_lift(X)
    L[-1, -1] = 0.0
    return L


def _lift0_adj(W: np.ndarray) -> np.ndarray:
    m = W.shape[0] - 1
    out = W[:m, :m].copy()
    out[np.diag_indices(m)] += 2.0 * W[:m, m]
    return out


def solve(problem: SdpProblem, settings: Optional[SolverSettings] = None,
          initial: Optional[np.ndarray] = None) -> SolverResult:
    """Run the splitting iteration until feasibility and stationarity hold.

    Returns the best iterate seen (the final one when status is Solved).
    Residual semantics: ``primal_residual`` is the largest absolute row or
    cone violation of the returned matrix; ``dual_residual`` is the
    max-norm stationarity defect of the recovered dual variables, scaled
    by the cost magnitude.  NumericalFailure is returned if an iterate
    stops being finite.
    """
    if settings is None:
        settings = SolverSettings()
    cons = problem.constraints
    n = cons.n
    n2 = n * n
    sdr2 = cons.variant is SdrVariant.SDR_II
    M = problem.cost
    alpha = settings.over_relaxation
    rho = settings.penalty

    proj = _AffineProjector(cons)
    corner = np.zeros((n2 + 1, n2 + 1))
    corner[-1, -1] = 1.0

    X = barycenter_start(n) if initial is None else 0.5 * (
        np.asarray(initial, dtype=float) + np.asarray(initial, dtype=float).T
    )
    Y1 = X.copy()
    Y3 = X.copy()
    U1 = np.zeros_like(X)
    U3 = np.zeros_like(X)
    if sdr2:
        W = bordered_lift(X)
        UW = np.zeros((n2 + 1, n2 + 1))
    else:
        W = X.copy()
        UW = np.zeros_like(X)

    t0 = time.perf_counter()
    cost_scale = 1.0 + float(np.max(np.abs(M)))

    def report_metrics(Xs, U1c, U3c, UWc, rho_c):
        y = -rho_c * proj.dual_vector(U1c)
        N = -rho_c * U3c
        Z = -rho_c * UWc
        pull = _lift0_adj(Z) if sdr2 else Z
        stat = np.max(np.abs(M - matz(proj.RT @ y) - N - pull))
        dual = stat / cost_scale
        aff = cons.max_violation(Xs)
        neg = max(0.0, -float(Xs.min()))
        cone_mat = bordered_lift(Xs) if sdr2 else Xs
        lam_min = float(np.linalg.eigvalsh(0.5 * (cone_mat + cone_mat.T))[0])
        primal = max(aff, neg, max(0.0, -lam_min))
        dual_obj = float(cons.rhs @ y) - (float(Z[-1, -1]) if sdr2 else 0.0)
        gap = abs(float(np.sum(M * Xs)) - dual_obj)
        return primal, dual, gap, y, N, Z

    best = None  # (combined, Xs, primal, dual, gap, iteration, duals)
    status = STATUS_MAX_ITERS
    iterations = settings.max_iters
    comb_at_accept = np.inf
    accepted_combined = []
    last_adapt = 0

    for it in range(1, settings.max_iters + 1):
        rhs = (Y1 - U1) + (Y3 - U3) - M / rho
        if sdr2:
            rhs = rhs + _lift0_adj(W - UW)
            X = rhs / 3.0
            np.fill_diagonal(X, np.diag(rhs) / 5.0)
        else:
            X = (rhs + (W - UW)) / 3.0

        H1 = alpha * X + (1 - alpha) * Y1
        H3 = alpha * X + (1 - alpha) * Y3
        try:
            Y1_new = proj(H1 + U1)
            Y3_new = np.maximum(H3 + U3, 0.0)
            if sdr2:
                LX = _lift0(X)
                HW = alpha * LX + (1 - alpha) * (W - corner)
                W_new = _psd_clip(HW + corner + UW)
            else:
                HW = alpha * X + (1 - alpha) * W
                W_new = _psd_clip(HW + UW)
        except np.linalg.LinAlgError:
            # eigh refuses non-finite input; same failure class as the
            # explicit check below
            status = STATUS_NUMERICAL_FAILURE
            iterations = it
            break
        dY = (Y1_new - Y1) + (Y3_new - Y3)
        dY = dY + (_lift0_adj(W_new - W) if sdr2 else (W_new - W))
        U1 = U1 + H1 - Y1_new
        U3 = U3 + H3 - Y3_new
        UW = UW + HW + (corner if sdr2 else 0.0) - W_new
        Y1, Y3, W = Y1_new, Y3_new, W_new

        if it % settings.check_every != 0 and it != settings.max_iters:
            continue

        if not (np.isfinite(X).all() and np.isfinite(U1).all()):
            status = STATUS_NUMERICAL_FAILURE
            iterations = it
            break

        Xs = 0.5 * (X + X.T)
        primal, dual, gap, y, N, Z = report_metrics(Xs, U1, U3, UW, rho)
        combined = max(primal, dual)
        if best is None or combined < best[0]:
            best = (combined, Xs, primal, dual, gap, it, (y, N, Z, rho))
        if primal <= settings.tol_primal and dual <= settings.tol_dual:
            status = STATUS_SOLVED
            iterations = it
            best = (combined, Xs, primal, dual, gap, it, (y, N, Z, rho))
            break

        if settings.adaptive_penalty and it - last_adapt >= 50:
            # raw split disagreement vs dual drift decides the direction
            r_split = np.linalg.norm(X - Y1) + np.linalg.norm(X - Y3)
            r_split += np.linalg.norm(
                (_lift0(X) + corner - W) if sdr2 else (X - W)
            )
            s_split = rho * np.linalg.norm(dY)
            factor = 1.0
            if r_split > 10.0 * s_split:
                factor = 2.0
            elif s_split > 10.0 * r_split:
                factor = 0.5
            if factor != 1.0 and combined <= comb_at_accept:
                U1 *= 1.0 / factor
                U3 *= 1.0 / factor
                UW *= 1.0 / factor
                rho *= factor
                comb_at_accept = combined
                accepted_combined.append(combined)
                last_adapt = it

    elapsed = time.perf_counter() - t0
    assert all(
        b <= a + 1e-15 for a, b in zip(accepted_combined, accepted_combined[1:])
    ), "combined residual rose across accepted penalty updates"

    if best is None:  # numerical failure before the first check
        Xs = np.zeros((n2, n2))
        return SolverResult(
            X_hat=Xs, objective=float("nan"), primal_residual=float("inf"),
            dual_residual=float("inf"), iterations=iterations, status=status,
            wall_time=elapsed, internals={},
        )
    _, Xs, primal, dual, gap, it_best, duals = best
    y, N, Z, rho_fin = duals
    return SolverResult(
        X_hat=Xs,
        objective=float(np.sum(M * Xs)),
        primal_residual=primal,
        dual_residual=dual,
        iterations=iterations if status != STATUS_MAX_ITERS else settings.max_iters,
        status=status,
        wall_time=elapsed,
        internals={
            "y": y, "N": N, "Z": Z, "rho": rho_fin, "gap": gap,
            "best_iteration": it_best,
            "accepted_combined": accepted_combined,
        },
    )


def residual_report(result: SolverResult, problem: SdpProblem):
    """Recompute residuals from the returned matrices, ignoring bookkeeping.

    Returns (primal, dual, gap_estimate).  Primal is the largest absolute
    row or cone violation of ``result.X_hat``.  Dual re-evaluates the
    stationarity defect from the stored dual variables; when a result
    carries no duals (for example a hand-built one) the dual defect of the
    zero certificate is reported.
    """
    cons = problem.constraints
    sdr2 = cons.variant is SdrVariant.SDR_II
    M = problem.cost
    Xs = 0.5 * (result.X_hat + result.X_hat.T)
    aff = cons.max_violation(Xs)
    neg = max(0.0, -float(Xs.min()))
    cone_mat = bordered_lift(Xs) if sdr2 else Xs
    lam_min = float(np.linalg.eigvalsh(0.5 * (cone_mat + cone_mat.T))[0])
    primal = max(aff, neg, max(0.0, -lam_min))

    n2 = cons.n ** 2
    y = result.internals.get("y", np.zeros(cons.row_count))
    N = result.internals.get("N", np.zeros((n2, n2)))
    Z = result.internals.get(
        "Z", np.zeros((n2 + 1, n2 + 1)) if sdr2 else np.zeros((n2, n2))
    )
    pull = _lift0_adj(Z) if sdr2 else Z
    RT = cons.rows.T.tocsr()
    stat = np.max(np.abs(M - matz(RT @ y) - N - pull))
    dual = stat / (1.0 + float(np.max(np.abs(M))))
    dual_obj = float(cons.rhs @ y) - (float(Z[-1, -1]) if sdr2 else 0.0)
    gap = abs(float(np.sum(M * Xs)) - dual_obj)
    return primal, dual, gap
