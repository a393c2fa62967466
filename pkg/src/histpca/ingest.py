"""
Block streams over synthetic, in-memory and file-backed data.

A :class:`DataSource` knows how to produce its samples in order; a
:class:`BlockStream` is one single-consumer pass over a source that hands out
:class:`DataBlock` objects of ``block_size`` rows (the last one may be short)
and keeps running :class:`StreamStats`.

File formats
------------
LIBSVM text: one sample per line, ``label idx:val idx:val ...`` with 1-based,
strictly increasing indices. Labels are discarded.

UCI bag-of-words (docword): three header lines ``D``, ``W``, ``NNZ`` followed
by ``docID wordID count`` triples grouped by non-decreasing docID. Each
document becomes one sample of raw counts in ``W`` dimensions.

Paths ending in ``.gz`` are read through gzip. A path of the form
``bundled:<name>`` refers to a file shipped in ``histpca/data``.
"""

from __future__ import annotations

import gzip
import io
import math
import os
import warnings
from dataclasses import dataclass
from importlib import resources
from typing import Iterator, NamedTuple

import numpy as np
import scipy.sparse as sp

from .datagen import SpikedModel, make_rng, sample_rows
from .exceptions import DimensionError, ParseError

BUNDLED_PREFIX = "bundled:"


class SparseRow(NamedTuple):
    indices: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class DataBlock:
    """``B`` samples in ``d`` dimensions, dense ndarray or CSR."""

    X: object

    def __post_init__(self):
        X = self.X
        if sp.issparse(X):
            if not sp.isspmatrix_csr(X):
                X = sp.csr_matrix(X)
            X = X.astype(np.float64, copy=False)
        else:
            X = np.asarray(X, dtype=np.float64)
            if X.ndim != 2:
                raise DimensionError(f"block must be 2-d, got shape {X.shape}")
        if X.shape[0] < 1:
            raise ValueError("a block holds at least one sample")
        object.__setattr__(self, "X", X)

    @property
    def B(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def shape(self):
        return self.X.shape

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.X)

    def frobenius_sq(self) -> float:
        data = self.X.data if self.is_sparse else self.X
        return float(np.vdot(data, data))

    def toarray(self) -> np.ndarray:
        return self.X.toarray() if self.is_sparse else np.array(self.X)

    def rows(self) -> Iterator:
        """Yield samples one at a time (1-d arrays, or SparseRow for CSR)."""
        if self.is_sparse:
            X = self.X
            for i in range(X.shape[0]):
                s, e = X.indptr[i], X.indptr[i + 1]
                yield SparseRow(X.indices[s:e], X.data[s:e])
        else:
            yield from self.X


@dataclass
class StreamStats:
    d: int
    n_samples: int = 0
    frobenius_sq: float = 0.0

    def update(self, block: DataBlock) -> None:
        self.n_samples += block.B
        self.frobenius_sq += block.frobenius_sq()


# --------------------------------------------------------------------------
# sources


class DataSource:
    """Base class: an ordered, re-readable collection of samples."""

    d: int
    n_samples: int | None = None  # None for endless synthetic streams
    sparse: bool = False

    def batches(self, block_size: int) -> Iterator:
        raise NotImplementedError

    def open(self, block_size: int) -> "BlockStream":
        return BlockStream(self, block_size)

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


class SyntheticSource(DataSource):
    """Spiked-model samples. Every ``open`` replays the same stream."""

    def __init__(self, model: SpikedModel, stream_seed, n_samples: int | None = None):
        self.model = model
        self.d = model.d
        self.stream_seed = stream_seed
        self.n_samples = n_samples

    def batches(self, block_size):
        rng = make_rng(self.stream_seed)
        left = self.n_samples
        while left is None or left > 0:
            b = block_size if left is None else min(block_size, left)
            yield sample_rows(self.model, b, rng)
            if left is not None:
                left -= b

    def describe(self):
        m = self.model
        return {"kind": "spiked", "d": m.d, "k": m.k, "sigma": m.sigma,
                "model_seed": m.seed, "n_samples": self.n_samples}


class MatrixSource(DataSource):
    """Rows of an in-memory dense array or sparse matrix.

    ``center=True`` subtracts the column mean (dense data only).
    """

    def __init__(self, X, center: bool = False):
        if sp.issparse(X):
            if center:
                raise ValueError("mean-centering is only supported for dense data")
            X = sp.csr_matrix(X, dtype=np.float64)
            self.sparse = True
        else:
            X = np.asarray(X, dtype=np.float64)
            if X.ndim != 2:
                raise DimensionError(f"data must be 2-d, got shape {X.shape}")
            if center:
                X = X - X.mean(axis=0)
        self.X = X
        self.n_samples, self.d = X.shape

    def batches(self, block_size):
        for s in range(0, self.n_samples, block_size):
            yield self.X[s : s + block_size]

    def describe(self):
        return {"kind": "matrix", "n_samples": self.n_samples, "d": self.d, "sparse": self.sparse}


def _open_text(path):
    path = resolve_path(path)
    if str(path).endswith(".gz"):
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def resolve_path(path) -> str:
    path = os.fspath(path)
    if path.startswith(BUNDLED_PREFIX):
        return str(resources.files("histpca") / "data" / path[len(BUNDLED_PREFIX):])
    return path


def _csr_from_rows(rows, d):
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    for i, (idx, _) in enumerate(rows):
        indptr[i + 1] = indptr[i] + len(idx)
    indices = np.concatenate([r[0] for r in rows]) if rows else np.zeros(0, np.int64)
    data = np.concatenate([r[1] for r in rows]) if rows else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(rows), d))


_MAX_INDEX = np.iinfo(np.int64).max


def _parse_libsvm_line(line, path, lineno):
    """Return (indices0, values) or None for blank/comment lines."""
    hash_pos = line.find("#")
    if hash_pos >= 0:
        line = line[:hash_pos]
    tokens = line.split()
    if not tokens:
        return None
    label = tokens[0]
    if ":" in label:
        raise ParseError(f"missing label before {label!r}", path, lineno)
    idx = []
    val = []
    prev = 0
    for tok in tokens[1:]:
        key, sep, value = tok.partition(":")
        if not sep:
            raise ParseError(f"expected index:value, got {tok!r}", path, lineno)
        if key == "qid":
            continue
        try:
            j = int(key)
        except ValueError:
            raise ParseError(f"non-integer index {key!r}", path, lineno) from None
        try:
            v = float(value)
        except ValueError:
            raise ParseError(f"non-numeric value {value!r}", path, lineno) from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite value {value!r}", path, lineno)
        if j <= 0:
            raise ParseError(f"index {j} must be >= 1", path, lineno)
        if j > _MAX_INDEX:
            raise ParseError(f"index {j} is too large", path, lineno)
        if j <= prev:
            raise ParseError(f"index {j} not greater than previous index {prev}", path, lineno)
        prev = j
        idx.append(j - 1)
        val.append(v)
    return np.asarray(idx, dtype=np.int64), np.asarray(val, dtype=np.float64)


class LibsvmSource(DataSource):
    """LIBSVM text file.

    Without ``d`` the file is pre-scanned once. With ``d`` nothing is read
    until streaming starts; ``n_samples`` is then counted on first access.
    """

    sparse = True

    def __init__(self, path, d: int | None = None):
        self.path = os.fspath(path)
        self._n = None
        if d is None:
            d, self._n = self._probe()
        elif d < 1:
            raise ValueError(f"d must be positive, got {d}")
        self.d = int(d)

    @property
    def n_samples(self) -> int:
        if self._n is None:
            self._n = sum(1 for _ in self._lines())
        return self._n

    def _probe(self):
        d = 0
        n = 0
        for _, parsed in self._lines():
            n += 1
            if len(parsed[0]):
                d = max(d, int(parsed[0][-1]) + 1)
        return d, n

    def _lines(self):
        with _open_text(self.path) as fh:
            for lineno, line in enumerate(fh, 1):
                parsed = _parse_libsvm_line(line, self.path, lineno)
                if parsed is not None:
                    yield lineno, parsed

    def batches(self, block_size):
        rows = []
        for lineno, (idx, val) in self._lines():
            if len(idx) and idx[-1] >= self.d:
                raise ParseError(f"index {idx[-1] + 1} exceeds dimension d={self.d}", self.path, lineno)
            rows.append((idx, val))
            if len(rows) == block_size:
                yield _csr_from_rows(rows, self.d)
                rows = []
        if rows:
            yield _csr_from_rows(rows, self.d)

    def describe(self):
        return {"kind": "libsvm", "path": self.path, "d": self.d}


class DocwordSource(DataSource):
    """UCI bag-of-words file; one sample of raw counts per document."""

    sparse = True

    def __init__(self, path):
        self.path = os.fspath(path)
        with _open_text(self.path) as fh:
            self.n_samples, self.d, self.nnz = self._header(fh)

    def _header(self, fh):
        vals = []
        for lineno in (1, 2, 3):
            line = fh.readline()
            if not line:
                raise ParseError("truncated header (expected D, W, NNZ)", self.path, lineno)
            try:
                v = int(line.strip())
            except ValueError:
                raise ParseError(f"malformed header value {line.strip()!r}", self.path, lineno) from None
            if v < 0:
                raise ParseError(f"negative header value {v}", self.path, lineno)
            vals.append(v)
        if vals[1] < 1:
            raise ParseError("vocabulary size W must be positive", self.path, 2)
        return tuple(vals)

    def _check_line(self, line, lineno, prev):
        """Validate one body line against the previous ``(doc, word)``."""
        parts = line.split()
        if not parts:
            return None
        if len(parts) != 3:
            raise ParseError(f"expected 'docID wordID count', got {line.strip()!r}", self.path, lineno)
        try:
            doc, word = int(parts[0]), int(parts[1])
            count = float(parts[2])
        except ValueError:
            raise ParseError(f"non-numeric field in {line.strip()!r}", self.path, lineno) from None
        if not math.isfinite(count):
            raise ParseError(f"non-finite count {parts[2]!r}", self.path, lineno)
        if not 1 <= doc <= self.n_samples:
            raise ParseError(f"docID {doc} outside 1..{self.n_samples}", self.path, lineno)
        if not 1 <= word <= self.d:
            raise ParseError(f"wordID {word} outside 1..{self.d}", self.path, lineno)
        if doc < prev[0]:
            raise ParseError(f"docID {doc} decreases (previous {prev[0]})", self.path, lineno)
        if doc == prev[0] and word <= prev[1]:
            raise ParseError(f"wordID {word} repeated or out of order in doc {doc}", self.path, lineno)
        return doc, word, count

    def _fast_chunk(self, lines, prev):
        """Vectorized parse of a chunk; None if anything needs the careful path."""
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                a = np.loadtxt(lines, dtype=np.float64, comments=None, ndmin=2)
        except ValueError:
            return None
        if a.size == 0:
            return None if any(line.strip() for line in lines) else (np.zeros(0, np.int64),) * 2 + (np.zeros(0),)
        if a.shape[1] != 3 or not np.all(np.isfinite(a)):
            return None
        doc, word = a[:, 0], a[:, 1]
        if np.any(doc != np.floor(doc)) or np.any(word != np.floor(word)):
            return None
        doc, word = doc.astype(np.int64), word.astype(np.int64)
        if doc.min() < 1 or doc.max() > self.n_samples or word.min() < 1 or word.max() > self.d:
            return None
        pdoc = np.concatenate(([prev[0]], doc))
        pword = np.concatenate(([prev[1]], word))
        step = np.diff(pdoc)
        if np.any(step < 0) or np.any((step == 0) & (np.diff(pword) <= 0)):
            return None
        return doc, word, a[:, 2].copy()

    def _triples(self):
        """Yield validated (doc, word, count) arrays chunk by chunk."""
        prev = (1, 0)
        with _open_text(self.path) as fh:
            self._header(fh)
            lineno = 4
            while True:
                lines = fh.readlines(1 << 20)
                if not lines:
                    break
                got = self._fast_chunk(lines, prev)
                if got is None:
                    rows = []
                    for off, line in enumerate(lines):
                        t = self._check_line(line, lineno + off, prev)
                        if t is not None:
                            rows.append(t)
                            prev = t[:2]
                    arr = np.array(rows, dtype=np.float64).reshape(-1, 3)
                    got = arr[:, 0].astype(np.int64), arr[:, 1].astype(np.int64), arr[:, 2]
                elif got[0].size:
                    prev = (int(got[0][-1]), int(got[1][-1]))
                lineno += len(lines)
                yield got

    def _documents(self):
        """Yield (indices0, counts) for every docID 1..D in order."""
        D = self.n_samples
        cur_doc = 1
        pend_idx, pend_val = [], []
        seen = 0
        empty = (np.zeros(0, np.int64), np.zeros(0))
        for doc, word, count in self._triples():
            seen += doc.size
            if not doc.size:
                continue
            cuts = np.flatnonzero(np.diff(doc)) + 1
            starts = np.concatenate(([0], cuts))
            ends = np.concatenate((cuts, [doc.size]))
            for s, e in zip(starts, ends):
                d_id = int(doc[s])
                if d_id > cur_doc:
                    if pend_idx:
                        yield np.concatenate(pend_idx), np.concatenate(pend_val)
                        pend_idx, pend_val = [], []
                    else:
                        yield empty
                    cur_doc += 1
                    while cur_doc < d_id:
                        yield empty
                        cur_doc += 1
                pend_idx.append(word[s:e] - 1)
                pend_val.append(count[s:e])
        while cur_doc <= D:
            if pend_idx:
                yield np.concatenate(pend_idx), np.concatenate(pend_val)
                pend_idx, pend_val = [], []
            else:
                yield empty
            cur_doc += 1
        if seen != self.nnz:
            warnings.warn(f"{self.path}: header NNZ={self.nnz} but body has {seen} entries", stacklevel=2)

    def batches(self, block_size):
        rows = []
        for row in self._documents():
            rows.append(row)
            if len(rows) == block_size:
                yield _csr_from_rows(rows, self.d)
                rows = []
        if rows:
            yield _csr_from_rows(rows, self.d)

    def describe(self):
        return {"kind": "docword", "path": self.path, "d": self.d, "n_samples": self.n_samples}


# --------------------------------------------------------------------------
# streams


class BlockStream:
    """One pass over a source, ``block_size`` samples at a time."""

    def __init__(self, source: DataSource, block_size: int):
        if block_size < 1:
            raise ValueError(f"block size must be >= 1, got {block_size}")
        self.source = source
        self.block_size = int(block_size)
        self.d = source.d
        self.stats = StreamStats(d=source.d)
        self._it = iter(source.batches(self.block_size))
        self._done = False

    @property
    def samples_emitted(self) -> int:
        return self.stats.n_samples

    def next_block(self) -> DataBlock | None:
        """Next block, or None once the source is exhausted."""
        if self._done:
            return None
        try:
            X = next(self._it)
        except StopIteration:
            self._done = True
            return None
        block = DataBlock(X)
        self.stats.update(block)
        return block

    def __iter__(self):
        return self

    def __next__(self) -> DataBlock:
        block = self.next_block()
        if block is None:
            raise StopIteration
        return block


class CountingStream:
    """Wraps a BlockStream and records how often each sample index is emitted."""

    def __init__(self, stream: BlockStream, counts: list | None = None):
        self.stream = stream
        self.counts = counts if counts is not None else []
        self._cursor = 0
        self.d = stream.d
        self.block_size = stream.block_size
        self.stats = stream.stats

    def next_block(self):
        block = self.stream.next_block()
        if block is None:
            return None
        end = self._cursor + block.B
        if len(self.counts) < end:
            self.counts.extend([0] * (end - len(self.counts)))
        for i in range(self._cursor, end):
            self.counts[i] += 1
        self._cursor = end
        return block

    @property
    def samples_emitted(self):
        return self.stream.samples_emitted

    def __iter__(self):
        return self

    def __next__(self):
        block = self.next_block()
        if block is None:
            raise StopIteration
        return block


def parse_libsvm(path, d_override: int | None = None, block_size: int = 10) -> BlockStream:
    return BlockStream(LibsvmSource(path, d_override), block_size)


def parse_docword(path, block_size: int = 10) -> BlockStream:
    return BlockStream(DocwordSource(path), block_size)


def next_block(stream: BlockStream) -> DataBlock | None:
    return stream.next_block()


def as_source(data) -> DataSource:
    """Wrap a matrix (dense or sparse) as a source; sources pass through."""
    if isinstance(data, DataSource):
        return data
    if isinstance(data, DataBlock):
        return MatrixSource(data.X)
    return MatrixSource(data)


def materialize(data, chunk: int = 4096):
    """Load a finite source into one dense array or CSR matrix."""
    if isinstance(data, MatrixSource):
        return data.X
    src = as_source(data)
    if src.n_samples is None:
        raise ValueError("cannot materialize an endless stream")
    parts = list(src.batches(chunk))
    if not parts:
        raise ValueError("source is empty")
    if sp.issparse(parts[0]):
        return sp.vstack(parts, format="csr")
    return np.vstack(parts)


# --------------------------------------------------------------------------
# writers


def _fmt(v: float) -> str:
    return repr(float(v))


def write_libsvm(rows, dest, labels=None) -> None:
    """Serialize rows of ``(indices0, values)`` (or a CSR matrix) as LIBSVM text."""
    if sp.issparse(rows):
        X = sp.csr_matrix(rows)
        rows = [(X.indices[X.indptr[i]:X.indptr[i + 1]], X.data[X.indptr[i]:X.indptr[i + 1]])
                for i in range(X.shape[0])]
    own = isinstance(dest, (str, os.PathLike))
    fh = (gzip.open(dest, "wt", encoding="utf-8") if str(dest).endswith(".gz") else open(dest, "w", encoding="utf-8")) if own else dest
    try:
        for i, (idx, val) in enumerate(rows):
            label = "0" if labels is None else str(labels[i])
            feats = " ".join(f"{int(j) + 1}:{_fmt(v)}" for j, v in zip(idx, val))
            fh.write(f"{label} {feats}".rstrip() + "\n")
    finally:
        if own:
            fh.close()


def write_docword(X, dest) -> None:
    """Write a CSR matrix of counts in UCI docword format."""
    X = sp.csr_matrix(X)
    X.sort_indices()
    D, W = X.shape
    buf = io.StringIO()
    buf.write(f"{D}\n{W}\n{X.nnz}\n")
    for i in range(D):
        for p in range(X.indptr[i], X.indptr[i + 1]):
            v = X.data[p]
            sval = str(int(v)) if float(v).is_integer() else _fmt(v)
            buf.write(f"{i + 1} {X.indices[p] + 1} {sval}\n")
    text = buf.getvalue()
    if str(dest).endswith(".gz"):
        # mtime=0 keeps the archive byte-stable
        with open(dest, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0, filename="") as gz:
            gz.write(text.encode("utf-8"))
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
