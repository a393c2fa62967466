"""
Seeded spiked-covariance stream generator.

Samples are drawn as ``x = U z + sigma * eps`` with ``z ~ N(0, I_k)`` and
``eps ~ N(0, I_d)``, so ``E[x x^T] = U U^T + sigma^2 I``. Randomness comes from
numpy's PCG64 generator, whose normal sampler is a ziggurat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import thin_qr

RngState = np.random.Generator


def make_rng(seed) -> RngState:
    """Deterministic generator; ``seed`` may be an int or a tuple of ints."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SpikedModel:
    d: int
    k: int
    U: np.ndarray
    sigma: float
    seed: int

    @property
    def eigenvalues(self) -> np.ndarray:
        """Population spectrum, descending."""
        lam = np.full(self.d, self.sigma**2)
        lam[: self.k] += 1.0
        return lam

    def covariance(self) -> np.ndarray:
        # only for small-d tests
        return self.U @ self.U.T + self.sigma**2 * np.eye(self.d)


def make_spiked_model(d: int, k: int, sigma: float, seed: int) -> SpikedModel:
    if not 1 <= k < d:
        raise ValueError(f"need 1 <= k < d, got k={k}, d={d}")
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    G = make_rng(seed).standard_normal((d, k))
    U = thin_qr(G).Q
    U.setflags(write=False)
    return SpikedModel(d=d, k=k, U=U, sigma=float(sigma), seed=int(seed))


def sample_rows(model: SpikedModel, B: int, rng: RngState) -> np.ndarray:
    """Draw a dense ``B x d`` array of samples, advancing ``rng``."""
    if B < 1:
        raise ValueError(f"block size must be >= 1, got {B}")
    Z = rng.standard_normal((B, model.k))
    X = rng.standard_normal((B, model.d))
    X *= model.sigma
    X += Z @ model.U.T
    return X


def sample_block(model: SpikedModel, B: int, rng: RngState):
    """One DataBlock of ``B`` fresh samples."""
    from .ingest import DataBlock

    return DataBlock(sample_rows(model, B, rng))


def true_subspace(model: SpikedModel) -> np.ndarray:
    return np.array(model.U)
