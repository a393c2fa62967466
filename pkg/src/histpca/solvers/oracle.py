"""Exact eigendecomposition of small symmetric matrices by cyclic Jacobi rotations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import NotSymmetricError

MAX_DIM = 64
MAX_SWEEPS = 100


@dataclass(frozen=True)
class OracleEigen:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns match eigenvalues

    def top(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, :k]


def exact_eig_oracle(cov, max_dim: int = MAX_DIM) -> OracleEigen:
    """Full spectrum of a symmetric matrix with ``d <= max_dim``.

    Cyclic-by-row Jacobi: every off-diagonal pair is annihilated in turn until
    the off-diagonal mass is negligible relative to ``||A||_F``.
    """
    A = np.array(cov, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if n > max_dim:
        raise ValueError(f"oracle limited to d <= {max_dim}, got {n}")
    scale = max(1.0, float(np.max(np.abs(A)))) if n else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10 * scale:
        raise NotSymmetricError("matrix is not symmetric within 1e-10")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    fro = np.linalg.norm(A)
    for _ in range(MAX_SWEEPS):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= 1e-15 * fro or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J on rows/cols p, q
                ap = A[:, p].copy()
                aq = A[:, q]
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :]
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    vals = np.diag(A).copy()
    order = np.argsort(-vals, kind="stable")
    vecs = V[:, order]
    # deterministic sign: largest-magnitude entry of each eigenvector positive
    piv = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[piv, np.arange(n)])
    signs[signs == 0] = 1.0
    return OracleEigen(vals[order], vecs * signs)
