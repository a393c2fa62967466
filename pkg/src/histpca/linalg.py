"""
Small dense/sparse kernels shared by every solver.

Dense matrices are plain float64 ``numpy.ndarray`` objects; sparse blocks are
``scipy.sparse.csr_matrix`` with sorted column indices. Nothing in here ever
forms a d x d matrix.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .exceptions import DimensionError, ZeroVectorError

# R diagonal below this fraction of ||A||_F counts as a dead column
RANK_TOL = 1e-12


class QRResult(NamedTuple):
    Q: np.ndarray
    R: np.ndarray
    replaced: tuple  # indices of columns re-randomized during factorization


def _as_matrix(block):
    # accept a DataBlock or a bare matrix
    return getattr(block, "X", block)


def sparse_block(rows: Sequence[Sequence[tuple]], n_cols: int) -> sp.csr_matrix:
    """Build a CSR block from per-row ``(column, value)`` pairs.

    Column indices must be strictly increasing within each row and lie in
    ``[0, n_cols)``.
    """
    indptr = [0]
    indices = []
    data = []
    for i, row in enumerate(rows):
        prev = -1
        for j, v in row:
            j = int(j)
            if j <= prev:
                raise ValueError(f"row {i}: column indices not strictly increasing at {j}")
            if j >= n_cols:
                raise ValueError(f"row {i}: column index {j} >= n_cols={n_cols}")
            prev = j
            indices.append(j)
            data.append(float(v))
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(rows), n_cols),
    )


def gram_apply(block, V: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Return ``scale * X^T (X V)`` without materializing ``X^T X``.

    ``block`` may be a DataBlock, a dense array or a scipy sparse matrix.
    ``V`` may be a d-vector or a d x k matrix; the result has the same shape.
    """
    X = _as_matrix(block)
    V = np.asarray(V, dtype=np.float64)
    if X.shape[1] != V.shape[0]:
        raise DimensionError(
            f"block has {X.shape[1]} columns but V has {V.shape[0]} rows"
        )
    if not np.isfinite(scale):
        raise ValueError(f"scale must be finite, got {scale}")
    XV = X @ V
    out = X.T @ XV
    if sp.issparse(out):  # pragma: no cover - scipy returns dense for dense V
        out = out.toarray()
    out = np.asarray(out, dtype=np.float64)
    if scale != 1.0:
        out *= scale
    return out


def thin_qr(A: np.ndarray, rng: np.random.Generator | None = None, overwrite: bool = False) -> QRResult:
    """Thin QR by modified Gram-Schmidt with one reorthogonalization pass.

    R has a non-negative diagonal. A column whose residual norm drops below
    ``RANK_TOL * ||A||_F`` is replaced by a random unit vector orthogonal to
    the preceding columns; its index is listed in ``replaced`` and its R
    diagonal entry is zero.

    With ``overwrite=True`` the factorization runs in place and ``Q`` shares
    memory with ``A`` (A must then be a float64 array).
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise DimensionError(f"thin_qr expects a 2-d array, got shape {A.shape}")
    d, k = A.shape
    if k > d:
        raise DimensionError(f"thin_qr needs rows >= cols, got {d} x {k}")
    scale = float(np.linalg.norm(A))
    Q = A if overwrite else A.copy()
    R = np.zeros((k, k))
    replaced = []
    for j in range(k):
        v = Q[:, j]
        for _ in range(2):
            for i in range(j):
                r = float(Q[:, i] @ v)
                R[i, j] += r
                v -= r * Q[:, i]
        nrm = float(np.linalg.norm(v))
        if not nrm > RANK_TOL * scale:
            if rng is None:
                rng = np.random.default_rng(j)
            v[:] = rng.standard_normal(d)
            for _ in range(2):
                for i in range(j):
                    v -= float(Q[:, i] @ v) * Q[:, i]
            v /= np.linalg.norm(v)
            R[j, j] = 0.0
            replaced.append(j)
        else:
            v /= nrm
            R[j, j] = nrm
    return QRResult(Q, R, tuple(replaced))


def normalize(v: np.ndarray) -> np.ndarray:
    """Scale ``v`` to unit Euclidean norm. Raises ZeroVectorError on zero input."""
    v = np.asarray(v, dtype=np.float64)
    nrm = np.linalg.norm(v)
    if nrm == 0.0 or not np.isfinite(nrm):
        raise ZeroVectorError(f"cannot normalize vector with norm {nrm}")
    return v / nrm


def column_norms(A: np.ndarray) -> np.ndarray:
    """Euclidean norm of every column of ``A`` (the tracked eigenvalue weights)."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    return np.sqrt(np.einsum("ij,ij->j", A, A))


def orthonormality_error(Q: np.ndarray) -> float:
    """max |Q^T Q - I|."""
    Q = np.asarray(Q)
    if Q.ndim == 1:
        Q = Q[:, None]
    G = Q.T @ Q
    return float(np.max(np.abs(G - np.eye(G.shape[0]))))
