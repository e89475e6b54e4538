"""Dense linear algebra specialized for tensor-product structure.

Conventions fixed project-wide:

- ``vec`` is column-major, so ``vec(ABC) = (C^T kron A) vec(B)``.
- Eigen/singular values are returned in descending order.
- Rank-1 factors are de-phased so the largest-magnitude entry of the left
  vector is real and nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DimensionError

HERMITICITY_TOL = 1e-10
DEGENERACY_TOL = 1e-12


def vec(m: np.ndarray) -> np.ndarray:
    """Column-major vectorization of a matrix."""
    m = np.asarray(m)
    return m.reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec`; square by default."""
    v = np.asarray(v).reshape(-1)
    if cols is None:
        cols = rows
    if v.size != rows * cols:
        raise DimensionError(f"cannot unvec length {v.size} into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product (thin wrapper kept for a uniform API)."""
    return np.kron(np.asarray(a), np.asarray(b))


def commutation_matrix(q: int, m: int) -> np.ndarray:
    """K_{qm} with K_{qm} vec(O) = vec(O^T) for every q x m matrix O.

    A 0/1 permutation matrix of size qm x qm.
    """
    if q < 1 or m < 1:
        raise DimensionError("commutation matrix needs positive dimensions")
    k = np.zeros((q * m, q * m))
    for i in range(q):
        for j in range(m):
            # vec(O)[j*q + i] = O[i, j] ; vec(O^T)[i*m + j] = O[i, j]
            k[i * m + j, j * q + i] = 1.0
    return k


def vec_kron_identity(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(I_n kron K_{qm} kron I_p)(vec(A) kron vec(B)) for A m x n, B p x q.

    Equals vec(A kron B); kept as an explicit construction so the identity
    can be checked against the direct route.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    m, n = a.shape
    p, q = b.shape
    perm = np.kron(np.kron(np.eye(n), commutation_matrix(q, m)), np.eye(p))
    return perm @ np.kron(vec(a), vec(b))


def kron_mixing_matrix(d1: int, d2: int) -> np.ndarray:
    """I_{d1} kron K_{d2 d1} kron I_{d2}, the factor relating vec(A kron B)
    to vec(A) kron vec(B) for square A (d1) and B (d2)."""
    return np.kron(np.kron(np.eye(d1), commutation_matrix(d2, d1)), np.eye(d2))


def kron_rearrange(m: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """Van Loan rearrangement: maps A kron B to vec(A) vec(B)^T.

    Linear, bijective and Frobenius-norm preserving (an index permutation).
    """
    m = np.asarray(m)
    if m.shape != (d1 * d2, d1 * d2):
        raise DimensionError(f"expected {(d1 * d2, d1 * d2)} matrix, got {m.shape}")
    # row (a, c), col (b, e) of m maps to R[(b, a), (e, c)] with column-major
    # vec indices (b*d1 + a) and (e*d2 + c)
    m4 = m.reshape(d1, d2, d1, d2)
    return m4.transpose(2, 0, 3, 1).reshape(d1 * d1, d2 * d2)


def kron_rearrange_inverse(r: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """Inverse of :func:`kron_rearrange`."""
    r = np.asarray(r)
    if r.shape != (d1 * d1, d2 * d2):
        raise DimensionError(f"expected {(d1 * d1, d2 * d2)} matrix, got {r.shape}")
    r4 = r.reshape(d1, d1, d2, d2)
    return r4.transpose(1, 3, 0, 2).reshape(d1 * d2, d1 * d2)


def partial_trace(m: np.ndarray, d1: int, d2: int, which: str = "first") -> np.ndarray:
    """Partial trace over the first or second tensor factor.

    Tr_1(A kron B) = Tr(A) B and Tr_2(A kron B) = Tr(B) A.
    """
    m = np.asarray(m)
    if m.shape != (d1 * d2, d1 * d2):
        raise DimensionError(f"expected {(d1 * d2, d1 * d2)} matrix, got {m.shape}")
    m4 = m.reshape(d1, d2, d1, d2)
    if which == "first":
        return np.einsum("abac->bc", m4)
    if which == "second":
        return np.einsum("abcb->ac", m4)
    raise ValueError(f"which must be 'first' or 'second', got {which!r}")


def is_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    m = np.asarray(m)
    scale = max(1.0, float(np.linalg.norm(m)))
    return bool(np.linalg.norm(m - m.conj().T) <= tol * scale)


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + np.asarray(m).conj().T) / 2


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a (nearly) Hermitian matrix, eigenvalues descending.

    The input is symmetrized internally; callers that must reject
    non-Hermitian inputs should check :func:`is_hermitian` first.
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected square matrix, got {m.shape}")
    vals, vecs = np.linalg.eigh(hermitian_part(m))
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order]


def _fix_phase(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rotate the pair so the largest-|.| entry of u is real nonnegative."""
    i = int(np.argmax(np.abs(u)))
    z = u[i]
    if np.abs(z) == 0:
        return u, v
    phase = z / np.abs(z)
    return u / phase, v / phase


@dataclass
class SvdFactor:
    """Leading singular triple of a matrix.

    sigma * left @ right.conj().T is the Frobenius-nearest rank-1 matrix;
    residual is the Frobenius norm of the remainder. ``degenerate`` flags a
    leading singular-value gap below 1e-12 * sigma.
    """

    left: np.ndarray
    right: np.ndarray
    sigma: float
    residual: float
    degenerate: bool = False


def best_rank_one(m: np.ndarray) -> SvdFactor:
    """Leading singular triple via full SVD, with the project phase convention."""
    m = np.asarray(m)
    norm = float(np.linalg.norm(m))
    if norm == 0.0:
        raise DegenerateInputError("best_rank_one of the zero matrix")
    u, s, vh = np.linalg.svd(m)
    left, right = _fix_phase(u[:, 0], vh[0].conj())
    # tail norm, not sqrt(||m||^2 - sigma^2): avoids cancellation on rank-1 input
    residual = float(np.linalg.norm(s[1:]))
    degenerate = len(s) > 1 and (s[0] - s[1]) < DEGENERACY_TOL * s[0]
    return SvdFactor(
        left=left, right=right, sigma=float(s[0]), residual=residual, degenerate=degenerate
    )


def polar_unitary(m: np.ndarray) -> np.ndarray:
    """Unitary factor of the polar decomposition; nearest unitary in Frobenius norm."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected square matrix, got {m.shape}")
    u, s, vh = np.linalg.svd(m)
    if s[-1] <= 1e-10 * max(1.0, s[0]):
        raise DegenerateInputError("polar_unitary of a (near-)singular matrix")
    return u @ vh
