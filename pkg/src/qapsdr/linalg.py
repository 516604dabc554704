"""Dense symmetric linear algebra used by every other module.

Everything here operates on plain numpy arrays of modest size (dimension
at most a few hundred).  The routines are deterministic: for a fixed
input array the output is bit-for-bit reproducible, which matters because
downstream experiments freeze expected values.

Conventions
-----------
* ``vec`` stacks columns, so ``vec(X)[j*n + i] == X[i, j]``.
* Eigenvalues are returned in ascending order.
* Every eigenvector is normalized so that its entry of largest absolute
  value is positive; among equal absolute values the lowest index wins.
  This removes the sign ambiguity of eigendecompositions and makes
  :class:`Spectrum` reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, KernelMismatch, SizeLimit

# Dense Kronecker products larger than this (product of the two dimensions)
# are refused; the supported regime is n <= 12 so n*n <= 144 stays well below.
KRON_BUDGET = 400

# A vector claimed to lie in a kernel may miss by at most this fraction of
# the matrix scale before lambda2_restricted refuses to interpret it.
KERNEL_REL_TOL = 1e-6


class SymMatrix:
    """A real symmetric matrix with storage-enforced symmetry.

    Only the lower triangle of the input is authoritative: the upper
    triangle is overwritten with the mirror image, so
    ``entries[i][j] == entries[j][i]`` holds exactly, not merely up to
    rounding.
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise InvalidInput(f"expected a square matrix, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise InvalidInput("dimension must be at least 1")
        if not np.all(np.isfinite(arr)):
            raise InvalidInput("matrix entries must be finite")
        lower = np.tril(arr)
        self.entries = lower + np.tril(arr, -1).T

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


def as_sym_array(A) -> np.ndarray:
    """Coerce ``A`` (array-like or SymMatrix) to a symmetric float ndarray."""
    if isinstance(A, SymMatrix):
        return A.entries
    arr = np.asarray(A, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("matrix entries must be finite")
    return 0.5 * (arr + arr.T)


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a symmetric matrix plus two derived statistics.

    ``eigenvalues`` ascend; column ``i`` of ``eigenvectors`` pairs with
    ``eigenvalues[i]``.  ``min_gap`` is the smallest distance between two
    distinct eigenvalue indices and ``min_alignment_sq`` the smallest
    squared inner product between an eigenvector and the all-ones vector.
    Both statistics feed the deterministic exactness test, which needs
    them together, hence they are computed eagerly here.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    min_gap: float
    min_alignment_sq: float


def _fix_signs(U: np.ndarray) -> np.ndarray:
    """Flip eigenvector columns so the largest-magnitude entry is positive."""
    out = U.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        k = int(np.argmax(np.abs(col)))  # argmax takes the lowest index on ties
        if col[k] < 0:
            out[:, j] = -col
    return out


def sym_eig(A) -> Spectrum:
    """Full eigendecomposition with the package's deterministic conventions.

    Parameters
    ----------
    A : array-like or SymMatrix
        Symmetric matrix with finite entries.

    Returns
    -------
    Spectrum
        Ascending eigenvalues, sign-fixed orthonormal eigenvectors, the
        minimum eigenvalue gap and the minimum squared alignment with
        the all-ones vector.
    """
    arr = as_sym_array(A)
    w, U = np.linalg.eigh(arr)
    U = _fix_signs(U)
    n = arr.shape[0]
    if n > 1:
        gaps = np.diff(w)  # ascending order: adjacent gaps realize the minimum
        min_gap = float(np.min(np.abs(gaps)))
    else:
        min_gap = 0.0
    align = U.T @ np.ones(n)
    return Spectrum(
        eigenvalues=w,
        eigenvectors=U,
        min_gap=min_gap,
        min_alignment_sq=float(np.min(align**2)),
    )


def psd_project(S) -> np.ndarray:
    """Project onto the positive semidefinite cone in Frobenius norm.

    Eigenvalues are clipped at zero and the matrix reassembled; the result
    is the unique nearest positive semidefinite matrix.
    """
    arr = as_sym_array(S)
    w, U = np.linalg.eigh(arr)
    out = (U * np.maximum(w, 0.0)) @ U.T
    return 0.5 * (out + out.T)


def vec(X) -> np.ndarray:
    """Stack the columns of ``X`` into one vector."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise InvalidInput(f"expected a matrix, got ndim {arr.ndim}")
    return arr.flatten(order="F")


def matz(x) -> np.ndarray:
    """Invert :func:`vec`: reshape a length n^2 vector to an n by n matrix."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise InvalidInput(f"expected a vector, got ndim {arr.ndim}")
    n = int(round(np.sqrt(arr.size)))
    if n * n != arr.size:
        raise InvalidInput(f"length {arr.size} is not a perfect square")
    return arr.reshape(n, n, order="F")


def kron(A, B) -> np.ndarray:
    """Dense Kronecker product, refused above the configured size budget."""
    a = np.asarray(A, dtype=float)
    b = np.asarray(B, dtype=float)
    if a.shape[0] * b.shape[0] > KRON_BUDGET:
        raise SizeLimit(
            f"kron of {a.shape[0]} x {b.shape[0]} exceeds budget {KRON_BUDGET}"
        )
    return np.kron(a, b)


def complement_basis(x: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(x).

    Built from the Householder reflector taking x to a coordinate axis,
    so the basis is a deterministic function of x.
    """
    x = np.asarray(x, dtype=float)
    m = x.size
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        raise InvalidInput("cannot form the complement of the zero vector")
    u = x / nrm
    v = u.copy()
    v[0] += 1.0 if u[0] >= 0 else -1.0
    v /= np.linalg.norm(v)
    H = np.eye(m) - 2.0 * np.outer(v, v)  # H @ u = -/+ e_0
    return H[:, 1:]


def lambda2_restricted(Q, x) -> float:
    """Smallest eigenvalue of Q on the orthogonal complement of span(x).

    When ``Q @ x == 0`` this is the second-smallest eigenvalue of Q.  The
    caller must actually hand over a kernel vector: if the residual
    ``norm(Q @ x)`` exceeds a small fraction of the matrix scale the
    interpretation breaks down and :class:`KernelMismatch` is raised with
    the measured residual.
    """
    arr = as_sym_array(Q)
    xv = np.asarray(x, dtype=float)
    scale = np.linalg.norm(arr)
    limit = KERNEL_REL_TOL * max(1.0, scale)
    resid = float(np.linalg.norm(arr @ xv))
    if resid > limit * max(1.0, float(np.linalg.norm(xv))):
        raise KernelMismatch(resid, limit)
    B = complement_basis(xv)
    return float(np.linalg.eigvalsh(B.T @ arr @ B)[0])


def restricted_min_eig(Q, basis: np.ndarray) -> float:
    """Smallest eigenvalue of Q restricted to the span of ``basis`` columns."""
    arr = as_sym_array(Q)
    return float(np.linalg.eigvalsh(basis.T @ arr @ basis)[0])


def operator_norm(A) -> float:
    """Largest absolute eigenvalue of a symmetric matrix."""
    arr = as_sym_array(A)
    return float(np.max(np.abs(np.linalg.eigvalsh(arr))))
