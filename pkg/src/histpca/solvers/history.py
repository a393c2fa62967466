"""
History PCA.

Block ``tau`` is absorbed by running a few orthogonal iterations on the
surrogate covariance

    ((tau - 1) / tau) * Q_prev diag(lam) Q_prev^T + (1 / tau) * (1 / B) X^T X

starting from the previous basis. The first block uses ``I + (1/B) X^T X``.
Only the d x k basis and k weights survive between blocks.

The rank-1 path keeps the history weight fixed at 1 unless
``track_lambda=True``; rank-k always carries the column-norm weights.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..exceptions import DimensionError
from ..ingest import DataBlock, SparseRow
from ..linalg import column_norms, gram_apply
from ..metrics import principal_angle_distance
from .base import StreamingSolver, SubspaceEstimate, check_finite, qr_step

DEFAULT_M = 3
DEFAULT_TOL = 1e-8


def _as_block(block):
    if isinstance(block, DataBlock):
        return block
    if isinstance(block, np.ndarray) or sp.issparse(block):
        return DataBlock(block)
    return None


def _check_dim(block_d, Q):
    if block_d != Q.shape[0]:
        raise DimensionError(f"block has d={block_d} but the basis has {Q.shape[0]} rows")


def history_first_block(Q0, block, m: int = DEFAULT_M, tol: float = DEFAULT_TOL, rng=None) -> SubspaceEstimate:
    """Absorb the first block: orthogonal iteration on ``I + (1/B) X^T X``."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    blk = _as_block(block)
    Q = np.array(Q0, dtype=np.float64)
    if Q.ndim == 1:
        Q = Q[:, None]
    if blk is None:
        return _rows_update(Q, np.ones(Q.shape[1]), 1, block, m, rng)
    _check_dim(blk.d, Q)
    scale = 1.0 / blk.B
    flagged = 0
    for _ in range(m):
        S = gram_apply(blk, Q, scale)
        S += Q
        lam = column_norms(S)
        Qn, nbad = qr_step(S, rng, "history")
        flagged += nbad
        moved = principal_angle_distance(Q, Qn)
        Q = Qn
        if moved < tol:
            break
    return SubspaceEstimate(Q, lam, tau=1, rerandomized=flagged)


def history_update(state: SubspaceEstimate, block, m: int = DEFAULT_M, tol: float = DEFAULT_TOL,
                   track_lambda: bool | None = None, rng=None) -> SubspaceEstimate:
    """Absorb block ``tau = state.tau + 1``.

    ``block`` is a DataBlock (or matrix), or any iterable of rows. With rows
    and ``m == 1`` the rows are consumed one at a time and never stored, which
    keeps the working set at O(kd).
    """
    if state.tau < 1:
        raise ValueError("history_update needs an initialized state (tau >= 1)")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    k = state.k
    if track_lambda is None:
        track_lambda = k > 1
    weights = state.lam if track_lambda else np.ones(k)
    tau = state.tau + 1
    blk = _as_block(block)
    if blk is None:
        if m == 1:
            return _rows_update(state.Q, weights, tau, block, 1, rng, state.rerandomized)
        blk = _stack_rows(block, state.d)
    _check_dim(blk.d, state.Q)

    Qp = state.Q
    hist = weights * ((tau - 1) / tau)
    scale = 1.0 / (tau * blk.B)
    Q = Qp
    flagged = state.rerandomized
    for _ in range(m):
        S = gram_apply(blk, Q, scale)
        C = Qp.T @ Q
        C *= hist[:, None]
        S += Qp @ C
        lam = column_norms(S)
        Qn, nbad = qr_step(S, rng, "history")
        flagged += nbad
        if m == 1:
            Q = Qn
            break
        moved = principal_angle_distance(Q, Qn)
        Q = Qn
        if moved < tol:
            break
    return SubspaceEstimate(Q, lam, tau=tau, rerandomized=flagged)


def history_update_rows(state: SubspaceEstimate, rows, track_lambda: bool | None = None, rng=None) -> SubspaceEstimate:
    """Single-application (m = 1) update fed one sample at a time."""
    return history_update(state, iter(rows), m=1, track_lambda=track_lambda, rng=rng)


def _stack_rows(rows, d):
    rows = list(rows)
    if not rows:
        raise ValueError("empty block")
    if isinstance(rows[0], SparseRow):
        indptr = np.cumsum([0] + [len(r.indices) for r in rows])
        X = sp.csr_matrix((np.concatenate([r.values for r in rows]),
                           np.concatenate([r.indices for r in rows]), indptr), shape=(len(rows), d))
        return DataBlock(X)
    X = np.empty((len(rows), d))
    for i, r in enumerate(rows):
        X[i] = r
    return DataBlock(X)


def _rows_update(Qp, weights, tau, rows, m, rng, flagged=0):
    # m == 1 only: S = hist * Qp + (1 / (tau n)) sum_i x_i (x_i^T Qp)
    if m != 1:
        return history_first_block(Qp, _stack_rows(rows, Qp.shape[0]), m=m, rng=rng)
    d = Qp.shape[0]
    S = np.zeros_like(Qp)
    n = 0
    for x in rows:
        if isinstance(x, SparseRow):
            xq = x.values @ Qp[x.indices]
            S[x.indices] += np.multiply.outer(x.values, xq)
        else:
            if x.shape[0] != d:
                raise DimensionError(f"row has d={x.shape[0]} but the basis has {d} rows")
            xq = x @ Qp
            S += np.multiply.outer(x, xq)
        n += 1
    if n == 0:
        raise ValueError("empty block")
    S *= 1.0 / (tau * n)
    hist = weights * ((tau - 1) / tau) if tau > 1 else np.ones_like(weights)
    for j in range(S.shape[1]):
        S[:, j] += hist[j] * Qp[:, j]
    check_finite(S, "history")
    lam = column_norms(S)
    Q, nbad = qr_step(S, rng, "history")
    return SubspaceEstimate(Q, lam, tau=tau, rerandomized=flagged + nbad)


class HistoryPCA(StreamingSolver):
    """Streaming History PCA.

    Parameters
    ----------
    d, k : int
        Dimension and target rank.
    rng : numpy Generator
        Used for the random initial basis and QR rescue draws.
    m : int
        Operator applications per block (default 3).
    tol : float
        Early exit when successive inner iterates move less than this.
    track_lambda : bool or None
        Carry column-norm weights into the history term. Defaults to
        ``k > 1``.
    """

    name = "history"

    def __init__(self, d, k, rng, m=DEFAULT_M, tol=DEFAULT_TOL, track_lambda=None, Q0=None):
        super().__init__(d, k, rng, Q0)
        self.m = m
        self.tol = tol
        self.track_lambda = track_lambda

    def _absorb(self, block):
        if self.state.tau == 0:
            return history_first_block(self.state.Q, block, self.m, self.tol, self.rng)
        return history_update(self.state, block, self.m, self.tol, self.track_lambda, self.rng)
