"""
Streaming baselines: Oja, Oja++ (staged columns), block power, DBPCA.

Oja steps use ``c / t`` with ``t`` the block counter, so ``B = 1`` recovers
the classical per-sample schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..exceptions import DimensionError
from ..ingest import DataBlock
from ..linalg import column_norms, gram_apply
from .base import StreamingSolver, SubspaceEstimate, qr_step

DBPCA_CAP = 2**15


def _block(block):
    return block if isinstance(block, DataBlock) else DataBlock(block)


def _check(blk, Q):
    if blk.d != Q.shape[0]:
        raise DimensionError(f"block has d={blk.d} but the basis has {Q.shape[0]} rows")


def oja_update(state: SubspaceEstimate, block, c: float, t: int, rng=None) -> SubspaceEstimate:
    """``Q <- QR(Q + (c/t) (1/B) X^T X Q)``."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    blk = _block(block)
    _check(blk, state.Q)
    with np.errstate(over="ignore", invalid="ignore"):
        S = gram_apply(blk, state.Q, c / (t * blk.B))
        S += state.Q
    lam = column_norms(S)
    Q, nbad = qr_step(S, rng, "oja")
    return SubspaceEstimate(Q, lam, tau=state.tau + 1, rerandomized=state.rerandomized + nbad)


def oja_pp_active(t: int, k: int, n_blocks: int) -> int:
    """Number of live columns at block ``t``: one more every ceil(n/(2k)) blocks."""
    period = max(1, math.ceil(n_blocks / (2 * k)))
    return min(k, 1 + (t - 1) // period)


def oja_pp_update(state: SubspaceEstimate, block, c: float, t: int, n_blocks: int, rng=None) -> SubspaceEstimate:
    """Oja step restricted to the columns activated so far.

    Newly activated columns are redrawn from N(0, I) before the step; the QR
    keeps dormant columns orthonormal to the live ones.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    blk = _block(block)
    _check(blk, state.Q)
    k = state.k
    live = oja_pp_active(t, k, n_blocks)
    prev = oja_pp_active(t - 1, k, n_blocks) if t > 1 else live
    Q = state.Q
    if live > prev:
        if rng is None:
            rng = np.random.default_rng(t)
        Q = Q.copy()
        Q[:, prev:live] = rng.standard_normal((Q.shape[0], live - prev))
        Q, _ = qr_step(Q, rng, "oja_pp")
    S = Q.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        S[:, :live] += gram_apply(blk, Q[:, :live], c / (t * blk.B))
    lam = column_norms(S)
    Qn, nbad = qr_step(S, rng, "oja_pp")
    return SubspaceEstimate(Qn, lam, tau=state.tau + 1, rerandomized=state.rerandomized + nbad)


def block_power_update(state: SubspaceEstimate, block, rng=None) -> SubspaceEstimate:
    """``Q <- QR((1/B) X^T X Q)``; a zero block re-randomizes the basis."""
    blk = _block(block)
    _check(blk, state.Q)
    S = gram_apply(blk, state.Q, 1.0 / blk.B)
    lam = column_norms(S)
    Q, nbad = qr_step(S, rng, "block_power")
    return SubspaceEstimate(Q, lam, tau=state.tau + 1, rerandomized=state.rerandomized + nbad)


@dataclass
class DoublingBuffer:
    """Accumulates blocks until ``target`` samples are held, then doubles it."""

    target: int
    cap: int = DBPCA_CAP
    parts: list = field(default_factory=list)
    n: int = 0
    steps: int = 0
    consumed: list = field(default_factory=list)  # samples used by each power step

    def push(self, X):
        self.parts.append(X)
        self.n += X.shape[0]

    def ready(self) -> bool:
        return self.n >= self.target

    def drain(self):
        if sp.issparse(self.parts[0]):
            X = sp.vstack(self.parts, format="csr")
        else:
            X = np.vstack(self.parts)
        self.consumed.append(self.n)
        self.parts = []
        self.n = 0
        self.steps += 1
        self.target = min(2 * self.target, self.cap)
        return X


def dbpca_update(state: SubspaceEstimate, block, buffer: DoublingBuffer, rng=None) -> SubspaceEstimate:
    """Buffer the block; run one block-power step once the buffer is full."""
    blk = _block(block)
    _check(blk, state.Q)
    buffer.push(blk.X)
    if not buffer.ready():
        return SubspaceEstimate(state.Q, state.lam, tau=state.tau + 1, rerandomized=state.rerandomized)
    X = buffer.drain()
    new = block_power_update(state, DataBlock(X), rng)
    new.tau = state.tau + 1
    return new


class Oja(StreamingSolver):
    name = "oja"

    def __init__(self, d, k, rng, c, Q0=None):
        super().__init__(d, k, rng, Q0)
        self.c = c

    def _absorb(self, block):
        return oja_update(self.state, block, self.c, self.state.tau + 1, self.rng)


class OjaPlusPlus(StreamingSolver):
    name = "oja_pp"

    def __init__(self, d, k, rng, c, n_blocks, Q0=None):
        super().__init__(d, k, rng, Q0)
        self.c = c
        self.n_blocks = max(1, int(n_blocks))

    def _absorb(self, block):
        return oja_pp_update(self.state, block, self.c, self.state.tau + 1, self.n_blocks, self.rng)


class BlockPower(StreamingSolver):
    name = "block_power"

    def _absorb(self, block):
        return block_power_update(self.state, block, self.rng)


class DBPCA(StreamingSolver):
    name = "dbpca"

    def __init__(self, d, k, rng, B, cap=DBPCA_CAP, Q0=None):
        super().__init__(d, k, rng, Q0)
        self.buffer = DoublingBuffer(target=B, cap=cap)

    def _absorb(self, block):
        return dbpca_update(self.state, block, self.buffer, self.rng)
