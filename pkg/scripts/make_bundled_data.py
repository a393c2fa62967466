"""Regenerate the small datasets shipped in src/histpca/data.

    python scripts/make_bundled_data.py

nips_like.docword.txt.gz
    1500 documents over a 1000-word vocabulary, drawn from a 12-topic
    mixture with Zipf-shaped topic-word distributions. Raw counts, UCI
    docword layout.
tiny_spiked.libsvm
    240 samples of a d=40, k=2 spiked model with roughly half the noise
    entries dropped, LIBSVM text.
"""

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from histpca.datagen import make_spiked_model, sample_rows
from histpca.ingest import write_docword, write_libsvm

OUT = Path(__file__).resolve().parents[1] / "src" / "histpca" / "data"


def docword(seed=20180611, D=1500, W=1000, topics=12, mean_len=220):
    rng = np.random.default_rng(seed)
    base = 1.0 / np.arange(1, W + 1) ** 1.05
    phi = np.empty((topics, W))
    for t in range(topics):
        perm = rng.permutation(W)
        phi[t] = rng.dirichlet(200.0 * base[perm] / base.sum())
    rows, cols, vals = [], [], []
    for i in range(D):
        theta = rng.dirichlet(np.full(topics, 0.15))
        length = max(20, rng.poisson(mean_len))
        counts = rng.multinomial(length, theta @ phi)
        nz = np.flatnonzero(counts)
        rows.extend([i] * len(nz))
        cols.extend(nz.tolist())
        vals.extend(counts[nz].tolist())
    return sp.csr_matrix((np.asarray(vals, float), (rows, cols)), shape=(D, W))


def tiny_libsvm(seed=7, n=240, d=40, k=2, sigma=0.3):
    model = make_spiked_model(d, k, sigma, seed)
    rng = np.random.default_rng(seed + 1)
    X = sample_rows(model, n, rng)
    X[rng.random(X.shape) < 0.5] = 0.0
    return sp.csr_matrix(np.round(X, 6))


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    write_docword(docword(), OUT / "nips_like.docword.txt.gz")
    X = tiny_libsvm()
    write_libsvm(X, OUT / "tiny_spiked.libsvm", labels=[i % 2 for i in range(X.shape[0])])
    print("wrote", sorted(p.name for p in OUT.iterdir()))
