"""Lifted cost matrices, constraint systems, and solution metrics.

The alignment problem over permutation matrices lifts to a semidefinite
program in the n^2 by n^2 variable X, which stands in for vec(P) vec(P)'.
Two relaxations are built here:

* SDR I: block trace and block sum rows, X PSD, X entrywise nonnegative.
* SDR II: everything in SDR I, plus row/column sums of the folded
  diagonal, with the plain PSD cone replaced by PSD-ness of the bordered
  matrix [[X, diag A(X)], [diag(X)', 1]].

Index convention: vec stacks columns, block (i, j) of X covers rows
i*n..(i+1)*n and columns j*n..(j+1)*n, and the folded diagonal puts
X[j*n+i, j*n+i] at position (i, j).  With these choices the lift of a
permutation matrix folds back to exactly that permutation matrix, which
the tests assert.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInput
from .instances import Permutation
from .linalg import as_sym_array, kron, matz, vec

# A solved relaxation counts as an exact recovery above this overlap.
EXACT_THRESHOLD = 1e-3

# Assignment ties are broken lexicographically; two completions within this
# relative slack of the optimum count as tied.
_TIE_TOL = 1e-12


class CostVariant(enum.Enum):
    SQUARED_DIFFERENCE = "squared_difference"
    NEGATED_KRON = "negated_kron"


class SdrVariant(enum.Enum):
    SDR_I = "I"
    SDR_II = "II"


def _coerce(value, enum_cls):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        pass
    for member in enum_cls:
        if str(value).lower() in (member.name.lower(), member.value.lower()):
            return member
    raise InvalidInput(f"unknown {enum_cls.__name__}: {value!r}")


def build_cost(A, C, variant=CostVariant.SQUARED_DIFFERENCE) -> np.ndarray:
    """Lifted cost matrix of size n^2.

    squared_difference: (I (x) A - C (x) I)^2, positive semidefinite, whose
    quadratic form at vec(P) equals the alignment objective exactly.
    negated_kron: -(C (x) A), the cross-term-only variant; the two differ
    by a constant on the feasible set.
    """
    variant = _coerce(variant, CostVariant)
    Aa = as_sym_array(A)
    Cc = as_sym_array(C)
    if Aa.shape != Cc.shape:
        raise InvalidInput("cost factors must share one dimension")
    n = Aa.shape[0]
    if variant is CostVariant.NEGATED_KRON:
        return -kron(Cc, Aa)
    D = kron(np.eye(n), Aa) - kron(Cc, np.eye(n))
    return D @ D


@dataclass
class ConstraintSystem:
    """Affine rows plus cone memberships for one relaxation variant.

    ``rows`` is a sparse matrix acting on vec(X) (column-stacked, length
    n^4) and ``rhs`` the matching right-hand sides.  ``cones`` is a frozen
    set of cone tags.  Redundant rows are kept on purpose; the solver's
    rank-tolerant projection absorbs them and each written row keeps a
    1:1 match with the mathematical constraint family.
    """

    n: int
    rows: sp.csr_matrix
    rhs: np.ndarray
    cones: frozenset
    variant: SdrVariant

    @property
    def row_count(self) -> int:
        return self.rows.shape[0]

    def residuals(self, X) -> np.ndarray:
        return self.rows @ vec(np.asarray(X, dtype=float)) - self.rhs

    def max_violation(self, X) -> float:
        return float(np.max(np.abs(self.residuals(X))))


def build_constraints(n: int, variant=SdrVariant.SDR_I) -> ConstraintSystem:
    """Assemble the full affine row system for one relaxation variant.

    Row families, in order (all indices 0-based, blocks (i, j)):
      1. trace of block (i, j) equals 1 if i == j else 0        (n^2 rows)
      2. total sum of block (i, j) equals 1                     (n^2 rows)
      3. sum over i of the (k, l) entries of blocks (i, i)
         equals 1 if k == l else 0                              (n^2 rows)
      4. sum over (i, j) of the (k, l) entries equals 1         (n^2 rows)
    SDR II appends row and column sums of the folded diagonal     (2n rows)
    and swaps the plain PSD cone for the bordered one.
    """
    variant = _coerce(variant, SdrVariant)
    if n < 2:
        raise InvalidInput("need n >= 2")
    n2 = n * n
    data, ri, ci, rhs = [], [], [], []
    r = 0

    def emit(cols, vals, b):
        nonlocal r
        ri.extend([r] * len(cols))
        ci.extend(cols)
        data.extend(vals)
        rhs.append(b)
        r += 1

    def flat(a, b):
        # column-stacked position of X[a, b]
        return b * n2 + a

    for i in range(n):
        for j in range(n):
            cols = [flat(i * n + k, j * n + k) for k in range(n)]
            emit(cols, [1.0] * n, 1.0 if i == j else 0.0)
    for i in range(n):
        for j in range(n):
            cols = [
                flat(i * n + k, j * n + l) for k in range(n) for l in range(n)
            ]
            emit(cols, [1.0] * n2, 1.0)
    for k in range(n):
        for l in range(n):
            cols = [flat(i * n + k, i * n + l) for i in range(n)]
            emit(cols, [1.0] * n, 1.0 if k == l else 0.0)
    for k in range(n):
        for l in range(n):
            cols = [flat(i * n + k, j * n + l) for i in range(n) for j in range(n)]
            emit(cols, [1.0] * n2, 1.0)

    cones = {"entrywise_nonneg"}
    if variant is SdrVariant.SDR_II:
        for i in range(n):
            cols = [flat(j * n + i, j * n + i) for j in range(n)]
            emit(cols, [1.0] * n, 1.0)
        for j in range(n):
            cols = [flat(j * n + i, j * n + i) for i in range(n)]
            emit(cols, [1.0] * n, 1.0)
        cones.add("bordered_psd")
        cones.add("row_col_stochastic_diag")
    else:
        cones.add("psd_on_X")

    R = sp.csr_matrix(
        (np.asarray(data), (np.asarray(ri), np.asarray(ci))), shape=(r, n2 * n2)
    )
    return ConstraintSystem(
        n=n, rows=R, rhs=np.asarray(rhs), cones=frozenset(cones), variant=variant
    )


def mat_diag(X) -> np.ndarray:
    """Fold the diagonal of the lifted variable into an n by n matrix.

    Entry (i, j) is X[j*n + i, j*n + i]; for the lift of a permutation
    matrix this recovers the permutation matrix itself.
    """
    arr = np.asarray(X, dtype=float)
    return matz(np.diag(arr).copy())


def bordered_lift(X) -> np.ndarray:
    """The (n^2 + 1) bordered matrix [[X, diag(X)], [diag(X)', 1]]."""
    arr = np.asarray(X, dtype=float)
    m = arr.shape[0]
    out = np.zeros((m + 1, m + 1))
    out[:m, :m] = arr
    d = np.diag(arr)
    out[:m, m] = d
    out[m, :m] = d
    out[m, m] = 1.0
    return out


def correlation(X_hat, truth: Permutation) -> float:
    """Normalized overlap x' X x / n^2 with x the lift of the hidden truth.

    Equals 1 exactly at the planted lift and 1/n at the flat barycenter.
    """
    arr = np.asarray(X_hat, dtype=float)
    n = truth.n
    if arr.shape[0] != n * n:
        raise InvalidInput("lifted variable size does not match the permutation")
    x = vec(truth.matrix())
    return float(x @ arr @ x) / n**2


def is_exact(corr: float) -> bool:
    """Recovery test: overlap at least 1 - 1e-3, boundary inclusive.

    Solver output can overshoot 1 by its own tolerance, so the sanity
    window is wider than the mathematical range [0, 1].
    """
    if not np.isfinite(corr) or corr < -1e-9 or corr > 1.0 + EXACT_THRESHOLD:
        raise InvalidInput(f"overlap {corr} outside the plausible window")
    return corr >= 1.0 - EXACT_THRESHOLD


def _assignment_value(score: np.ndarray, rows, cols) -> float:
    return float(score[rows, cols].sum())


def round_to_permutation(X_hat) -> Permutation:
    """Deterministic rounding of a lifted solution to a permutation.

    Maximizes the folded-diagonal score with an exact assignment solve,
    then refines to the lexicographically smallest optimal assignment so
    ties always resolve the same way (an all-ties score matrix rounds to
    the identity).
    """
    arr = np.asarray(X_hat, dtype=float)
    S = mat_diag(arr)
    n = S.shape[0]
    ri, ci = linear_sum_assignment(-S)
    best = _assignment_value(S, ri, ci)
    tol = _TIE_TOL * max(1.0, abs(best))

    # sigma[j] = assigned row of column j; fix columns left to right
    sigma = [-1] * n
    free_rows = list(range(n))
    remaining_val = best
    for j in range(n):
        for i in free_rows:
            rest_rows = [r for r in free_rows if r != i]
            if rest_rows:
                sub = S[np.ix_(rest_rows, range(j + 1, n))]
                rr, cc = linear_sum_assignment(-sub)
                completion = float(sub[rr, cc].sum())
            else:
                completion = 0.0
            if S[i, j] + completion >= remaining_val - tol:
                sigma[j] = i
                free_rows.remove(i)
                remaining_val = completion
                break
        if sigma[j] < 0:
            raise InvalidInput("assignment refinement failed; scores not finite?")
    return Permutation(tuple(sigma))
