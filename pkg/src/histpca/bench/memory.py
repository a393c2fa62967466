"""
Allocation accounting for History PCA updates.

A single block update is traced with ``tracemalloc`` (numpy reports its data
buffers to it). Rows are produced lazily by a generator. With ``m == 1`` they
are handed straight to the update, which only ever holds one of them; with
``m > 1`` they are first read into a B x d block, as a block stream would.
The basis carried in from the previous block is allocated before tracing
starts and added back to the measured peak.

Analytic working-state counts, in float64 entries:

* ``m == 1``: previous basis, accumulator, one row: ``(2k + 1) d``
* ``m > 1``: stacked block, previous basis, iterate, accumulator: ``(B + 3k) d``
"""

from __future__ import annotations

import tracemalloc
from dataclasses import dataclass

import numpy as np

from ..datagen import make_rng
from ..solvers.base import SubspaceEstimate, init_random_subspace
from ..solvers.history import history_update

FLOAT_BYTES = 8


@dataclass(frozen=True)
class MemoryReport:
    d: int
    k: int
    B: int
    m: int
    peak_bytes: int
    analytic_bytes: int

    @property
    def ratio(self) -> float:
        return self.peak_bytes / self.analytic_bytes


def analytic_entries(d: int, k: int, B: int, m: int) -> int:
    return (2 * k + 1) * d if m == 1 else (B + 3 * k) * d


def _row_stream(base, B, rng_seed):
    # one fresh row at a time; a cheap deterministic perturbation of ``base``
    for i in range(B):
        row = base * (1.0 + 0.01 * i)
        row[(rng_seed + i) % row.shape[0]] += 1.0
        yield row


def measure_history_update(d: int = 100_000, k: int = 1, B: int = 10, m: int = 1, seed: int = 0) -> MemoryReport:
    """Peak bytes of one History PCA block update fed as a row stream."""
    rng = make_rng(seed)
    Q = init_random_subspace(d, k, rng)
    state = SubspaceEstimate(Q, np.ones(k), tau=1)
    base = rng.standard_normal(d)
    rows = _row_stream(base, B, seed)
    tracemalloc.start()
    try:
        tracemalloc.reset_peak()
        if m == 1:
            new = history_update(state, rows, m=1, rng=rng)
        else:
            X = np.empty((B, d))
            for i, row in enumerate(rows):
                X[i] = row
            new = history_update(state, X, m=m, rng=rng)
            del X
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    assert new.tau == 2
    peak += Q.nbytes
    return MemoryReport(d, k, B, m, int(peak), analytic_entries(d, k, B, m) * FLOAT_BYTES)
