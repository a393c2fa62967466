"""Multi-pass baselines: block-streamed power method and VR-PCA."""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.sparse as sp

from ..exceptions import DivergenceError
from ..ingest import as_source, materialize
from ..linalg import column_norms, gram_apply
from .base import SubspaceEstimate, check_finite, init_random_subspace, qr_step


def power_method_batch(data, k: int, iters: int, rng, Q0=None, block_size: int = 4096,
                       callback: Callable | None = None) -> SubspaceEstimate:
    """Orthogonal iteration on ``(1/N) X^T X``, one full data pass per iteration.

    ``callback(iteration, estimate)`` runs after each pass.
    """
    src = as_source(data)
    N = src.n_samples
    if not N:
        raise ValueError("power method needs a finite, non-empty dataset")
    Q = init_random_subspace(src.d, k, rng) if Q0 is None else np.array(Q0, dtype=np.float64)
    if Q.ndim == 1:
        Q = Q[:, None]
    lam = np.ones(Q.shape[1])
    flagged = 0
    for it in range(1, iters + 1):
        S = np.zeros_like(Q)
        for X in src.batches(block_size):
            S += gram_apply(X, Q, 1.0 / N)
        lam = column_norms(S)
        Q, nbad = qr_step(S, rng, "power_batch")
        flagged += nbad
        if callback is not None:
            callback(it, SubspaceEstimate(Q.copy(), lam.copy(), tau=it, rerandomized=flagged))
    return SubspaceEstimate(Q, lam, tau=iters, rerandomized=flagged)


def default_vr_eta(X) -> float:
    """``1 / (||X||_F^2 / N)``: inverse mean squared sample norm."""
    vals = X.data if sp.issparse(X) else X
    fro = float(np.vdot(vals, vals))
    if fro == 0.0:
        raise ValueError("dataset has zero energy")
    return X.shape[0] / fro


def vr_pca(data, epochs: int, eta: float | None = None, rng=None, w0=None,
           callback: Callable | None = None, evals_per_epoch: int = 1) -> SubspaceEstimate:
    """Variance-reduced stochastic power iteration (rank 1).

    ``eta`` is a positive number or a rule: ``"mean_norm"`` (the default,
    ``N / ||X||_F^2``) or ``"mean_norm_sqrt_n"`` (that value over ``sqrt(N)``).
    Each epoch takes one pass to form ``g = (1/N) X^T X w_snap`` and then ``N``
    stochastic steps in a fresh random order,

        w <- normalize(w + eta * (x x^T w - x x^T w_snap + g)).

    ``callback(samples_accessed, w)`` fires ``evals_per_epoch`` times during
    each stochastic pass; accesses count both the gradient and stochastic
    passes.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    X = materialize(data)
    N, d = X.shape
    if eta is None or eta == "mean_norm":
        eta = default_vr_eta(X)
    elif eta == "mean_norm_sqrt_n":
        eta = default_vr_eta(X) / np.sqrt(N)
    if w0 is None:
        w = init_random_subspace(d, 1, rng)[:, 0].copy()
    else:
        w = np.array(w0, dtype=np.float64).reshape(-1)
        w /= np.linalg.norm(w)
    sparse = sp.issparse(X)
    if sparse:
        X = sp.csr_matrix(X)
        indptr, indices, vals = X.indptr, X.indices, X.data
    checkpoints = set(int(round(N * (j + 1) / evals_per_epoch)) for j in range(evals_per_epoch))
    accessed = 0
    g = np.empty(d)
    for _ in range(epochs):
        w_snap = w.copy()
        xs = np.asarray(X @ w_snap).reshape(-1)
        g[:] = np.asarray(X.T @ xs).reshape(-1) / N
        accessed += N
        order = rng.permutation(N)
        step = eta * g
        for n_done, i in enumerate(order, 1):
            if sparse:
                s, e = indptr[i], indptr[i + 1]
                idx, v = indices[s:e], vals[s:e]
                a = eta * (v @ w[idx] - xs[i])
                w += step
                w[idx] += a * v
            else:
                x = X[i]
                a = eta * (x @ w - xs[i])
                w += step
                w += a * x
            nrm = np.sqrt(w @ w)
            if not np.isfinite(nrm) or nrm == 0.0:
                raise DivergenceError("vr_pca: iterate became non-finite")
            w /= nrm
            if callback is not None and n_done in checkpoints:
                callback(accessed + n_done, w.copy())
        accessed += N
    check_finite(w, "vr_pca")
    Q = w[:, None].copy()
    lam = np.array([float(np.sqrt(np.sum(np.asarray(X.T @ (X @ w)) ** 2))) / N])
    return SubspaceEstimate(Q, lam, tau=epochs)
