"""PCA solvers behind a common streaming interface, plus the small-scale oracle."""

from .base import (
    ALGORITHMS,
    BATCH,
    STREAMING,
    SolverConfig,
    StreamingSolver,
    SubspaceEstimate,
    init_random_subspace,
)
from .baselines import (
    DBPCA,
    BlockPower,
    DoublingBuffer,
    Oja,
    OjaPlusPlus,
    block_power_update,
    dbpca_update,
    oja_pp_active,
    oja_pp_update,
    oja_update,
)
from .batch import default_vr_eta, power_method_batch, vr_pca
from .history import HistoryPCA, history_first_block, history_update, history_update_rows
from .oracle import OracleEigen, exact_eig_oracle


def make_solver(cfg: SolverConfig, d: int, rng, n_blocks: int | None = None) -> StreamingSolver:
    """Instantiate the streaming solver described by ``cfg``."""
    a = cfg.algorithm
    if a == "history":
        return HistoryPCA(d, cfg.k, rng, m=cfg.m, tol=cfg.tol, track_lambda=cfg.track_lambda)
    if a == "oja":
        return Oja(d, cfg.k, rng, cfg.c)
    if a == "oja_pp":
        if n_blocks is None:
            raise ValueError("oja_pp needs the stream length to schedule column activation")
        return OjaPlusPlus(d, cfg.k, rng, cfg.c, n_blocks)
    if a == "block_power":
        return BlockPower(d, cfg.k, rng)
    if a == "dbpca":
        return DBPCA(d, cfg.k, rng, cfg.B)
    raise ValueError(f"{a!r} is not a streaming algorithm")


__all__ = [
    "ALGORITHMS", "BATCH", "STREAMING", "SolverConfig", "StreamingSolver", "SubspaceEstimate",
    "init_random_subspace", "DBPCA", "BlockPower", "DoublingBuffer", "Oja", "OjaPlusPlus",
    "block_power_update", "dbpca_update", "oja_pp_active", "oja_pp_update", "oja_update",
    "default_vr_eta", "power_method_batch", "vr_pca", "HistoryPCA", "history_first_block",
    "history_update", "history_update_rows", "OracleEigen", "exact_eig_oracle", "make_solver",
]
