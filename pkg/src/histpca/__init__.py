"""Memory-bounded streaming PCA built around History PCA."""

from .datagen import SpikedModel, make_rng, make_spiked_model, sample_block, true_subspace
from .ingest import BlockStream, DataBlock, StreamStats, parse_docword, parse_libsvm
from .linalg import column_norms, gram_apply, normalize, thin_qr
from .metrics import explained_variance, principal_angle_distance, unnormalized_error
from .solvers import (
    HistoryPCA,
    SolverConfig,
    SubspaceEstimate,
    exact_eig_oracle,
    history_first_block,
    history_update,
)

__all__ = [
    "BlockStream", "DataBlock", "HistoryPCA", "SolverConfig", "SpikedModel", "StreamStats",
    "SubspaceEstimate", "column_norms", "exact_eig_oracle", "explained_variance", "gram_apply",
    "history_first_block", "history_update", "make_rng", "make_spiked_model", "normalize",
    "parse_docword", "parse_libsvm", "principal_angle_distance", "sample_block", "thin_qr",
    "true_subspace", "unnormalized_error",
]

__version__ = "0.1.0"
