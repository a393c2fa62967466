"""Shared solver state, configuration and the streaming-solver interface."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..exceptions import DivergenceError
from ..linalg import thin_qr

log = logging.getLogger("histpca.solvers")

STREAMING = ("history", "oja", "oja_pp", "block_power", "dbpca")
BATCH = ("power_batch", "vr_pca")
ALGORITHMS = STREAMING + BATCH


@dataclass
class SubspaceEstimate:
    """Orthonormal basis ``Q`` (d x k), eigenvalue weights ``lam`` and block count ``tau``."""

    Q: np.ndarray
    lam: np.ndarray
    tau: int = 0
    rerandomized: int = 0  # cumulative count of QR columns replaced by noise

    @property
    def d(self) -> int:
        return self.Q.shape[0]

    @property
    def k(self) -> int:
        return self.Q.shape[1]

    @property
    def w(self) -> np.ndarray:
        """First column as a vector (the rank-1 iterate)."""
        return self.Q[:, 0]

    def copy(self) -> "SubspaceEstimate":
        return replace(self, Q=self.Q.copy(), lam=self.lam.copy())


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str
    k: int = 1
    B: int = 10
    m: int = 3
    c: float | None = None
    tol: float = 1e-8
    track_lambda: bool | None = None
    eta: float | str | None = None  # number, or "mean_norm" / "mean_norm_sqrt_n"
    seed: int = 0
    d: int | None = None
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.B < 1:
            raise ValueError(f"block size must be >= 1, got {self.B}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.algorithm in ("oja", "oja_pp"):
            if self.c is None or not self.c > 0:
                raise ValueError(f"{self.algorithm} needs a step constant c > 0, got {self.c}")
        if self.algorithm == "vr_pca" and self.k != 1:
            raise ValueError("vr_pca is rank-1 only")
        if isinstance(self.eta, str):
            if self.eta not in ("mean_norm", "mean_norm_sqrt_n"):
                raise ValueError(f"unknown eta rule {self.eta!r}")
        elif self.eta is not None and not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.c is not None:
            object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "m", int(self.m))

    def digest(self) -> str:
        """Short stable label of the hyperparameters that distinguish runs."""
        a = self.algorithm
        if a == "history":
            tag = f"m={self.m}"
            if self.track_lambda is not None and self.track_lambda != (self.k > 1):
                tag += ";lambda=" + ("on" if self.track_lambda else "off")
            return tag
        if a in ("oja", "oja_pp"):
            return f"c={self.c:g}"
        if a == "vr_pca":
            if self.eta is None or isinstance(self.eta, str):
                return f"eta={self.eta or 'mean_norm'}"
            return f"eta={self.eta:.6g}"
        return "default"


def init_random_subspace(d: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Orthonormal d x k basis from the QR factor of a Gaussian matrix."""
    if not 1 <= k < d:
        raise ValueError(f"need 1 <= k < d, got k={k}, d={d}")
    return thin_qr(rng.standard_normal((d, k)), rng, overwrite=True).Q


def check_finite(S: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(S)):
        raise DivergenceError(f"{what}: iterate became non-finite")


def qr_step(S: np.ndarray, rng, what: str):
    """Orthonormalize ``S`` in place; returns (Q, number of re-randomized columns)."""
    check_finite(S, what)
    res = thin_qr(S, rng, overwrite=True)
    if res.replaced:
        log.warning("%s: rank collapse, re-randomized columns %s", what, list(res.replaced))
    return res.Q, len(res.replaced)


class StreamingSolver:
    """One owner, one stream. Subclasses implement ``_absorb``."""

    name = "streaming"

    def __init__(self, d: int, k: int, rng: np.random.Generator, Q0: np.ndarray | None = None):
        self.d = d
        self.k = k
        self.rng = rng
        Q0 = init_random_subspace(d, k, rng) if Q0 is None else np.array(Q0, dtype=np.float64)
        self.state = SubspaceEstimate(Q0, np.ones(k), tau=0)
        self.samples_seen = 0
        self.diverged = False

    @property
    def Q(self) -> np.ndarray:
        return self.state.Q

    @property
    def blocks_seen(self) -> int:
        return self.state.tau

    def partial_fit(self, block) -> "StreamingSolver":
        self.samples_seen += block.shape[0]
        if self.diverged:
            return self
        try:
            self.state = self._absorb(block)
        except DivergenceError as exc:
            log.warning("%s diverged: %s", self.name, exc)
            self.diverged = True
        return self

    def _absorb(self, block) -> SubspaceEstimate:
        raise NotImplementedError

    def estimate(self) -> SubspaceEstimate:
        return self.state.copy()
