"""Evaluation metrics: subspace distance, explained variance, eigenvalue gap error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import DimensionError
from .ingest import as_source
from .linalg import orthonormality_error, thin_qr

METRIC_NAMES = ("principal_angle", "explained_variance", "unnormalized_error")


@dataclass(frozen=True)
class MetricValue:
    name: str
    value: float
    samples_seen: int


def _as_columns(A):
    A = np.asarray(A, dtype=np.float64)
    return A[:, None] if A.ndim == 1 else A


def _orthonormal(A):
    if orthonormality_error(A) > 1e-6:
        return thin_qr(A).Q
    return A


def principal_angle_distance(U, V) -> float:
    """Sine of the largest principal angle between span(U) and span(V).

    Evaluated as the spectral norm of ``V - U (U^T V)``, which stays accurate
    for nearly identical subspaces where ``sqrt(1 - s_min^2)`` would bottom out
    around 1e-8. Inputs that are not orthonormal to 1e-6 are re-orthonormalized.
    """
    U = _orthonormal(_as_columns(U))
    V = _orthonormal(_as_columns(V))
    if U.shape != V.shape:
        raise DimensionError(f"subspace shapes differ: {U.shape} vs {V.shape}")
    R = V - U @ (U.T @ V)
    if R.shape[1] == 1:
        s = float(np.linalg.norm(R))
    else:
        s = float(np.linalg.norm(R, 2))
    return min(max(s, 0.0), 1.0)


def explained_variance(W, data, block_size: int = 4096) -> float:
    """``trace(W^T X^T X W) / ||X||_F^2`` accumulated in one pass over ``data``."""
    W = _as_columns(W)
    src = as_source(data)
    if src.d != W.shape[0]:
        raise DimensionError(f"data has d={src.d} but W has {W.shape[0]} rows")
    num = 0.0
    den = 0.0
    n = 0
    for X in src.batches(block_size):
        XW = np.asarray(X @ W)
        num += float(np.einsum("ij,ij->", XW, XW))
        vals = X.data if sp.issparse(X) else X
        den += float(np.vdot(vals, vals))
        n += X.shape[0]
    if n == 0:
        raise ValueError("explained variance of an empty dataset is undefined")
    if den == 0.0:
        raise ValueError("dataset has zero energy")
    return num / den


def rayleigh_energy(w, data, block_size: int = 4096) -> float:
    """``w^T X^T X w`` in one pass."""
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    src = as_source(data)
    total = 0.0
    for X in src.batches(block_size):
        Xw = np.asarray(X @ w)
        total += float(Xw @ Xw)
    return total


def unnormalized_error(w, data, lambda_max: float) -> float:
    """``lambda_max(X^T X) - w^T X^T X w`` for a unit vector ``w``."""
    return float(lambda_max) - rayleigh_energy(w, data)
