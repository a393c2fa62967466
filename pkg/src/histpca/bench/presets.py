"""Built-in experiment presets."""

from __future__ import annotations

from .spec import ExperimentSpec, SolverGrid

OJA_C_GRID = tuple(10.0 ** j for j in range(-6, 5))
FIGURE_SEEDS = tuple(range(5))
FIGURE_N = 10_000
SIGMAS = (0.1, 0.5, 0.8)

# (B, k) per row of three sigma panels
_FIG2_ROWS = ((10, 1), (10, 5), (100, 1), (100, 5), (100, 10))
_FIG3_ROWS = ((100, 1), (100, 5), (100, 10))


def _caption(d, B, k, sigma):
    return f"d = {d}, B = {B}, k = {k}, sig = {sigma}"


def _figure_solvers(k):
    grids = [
        SolverGrid("history", (("m", (3,)),)),
        SolverGrid("block_power"),
        SolverGrid("dbpca"),
        SolverGrid("oja", (("c", OJA_C_GRID),)),
    ]
    if k > 1:
        grids.append(SolverGrid("oja_pp", (("c", OJA_C_GRID),)))
    return tuple(grids)


def _panels(prefix, d, rows):
    out = []
    letters = iter("abcdefghijklmnopqrstuvwxyz")
    for B, k in rows:
        for sigma in SIGMAS:
            out.append(ExperimentSpec(
                name=f"{prefix}-{next(letters)}",
                description=_caption(d, B, k, sigma),
                source="spiked", d=d, sigma=sigma, n_samples=FIGURE_N, k=k, block_size=B,
                solvers=_figure_solvers(k), seeds=FIGURE_SEEDS,
                eval_every=max(1, 1000 // B),
            ))
    return out


def builtin_presets() -> list:
    """All bundled scenarios, in listing order."""
    presets = _panels("fig2-panel", 100, _FIG2_ROWS) + _panels("fig3-panel", 1000, _FIG3_ROWS)
    presets.append(ExperimentSpec(
        name="fig1-m-sweep",
        description="bundled docword sample, k = 1, B = 10, history m in 1, 3, 5, 7",
        source="docword", path="bundled:nips_like.docword.txt.gz", k=1, block_size=10,
        solvers=(SolverGrid("history", (("m", (1, 3, 5, 7)), ("track_lambda", (True,)))),),
        seeds=tuple(range(20)), metric="explained_variance", eval_every=10,
    ))
    presets.append(ExperimentSpec(
        name="multipass",
        description="d = 50, sig = 0.3, k = 1, five passes over 10000 samples",
        source="spiked", d=50, sigma=0.3, n_samples=10_000, k=1, block_size=10, passes=5,
        solvers=(
            SolverGrid("history", (("m", (3,)),)),
            SolverGrid("power_batch"),
            SolverGrid("vr_pca", (("eta", ("mean_norm_sqrt_n",)),)),
        ),
        seeds=(0, 1, 2), metric="unnormalized_error", eval_every=100,
    ))
    presets.append(ExperimentSpec(
        name="ci-libsvm",
        description="bundled LIBSVM sample, d = 40, k = 2, B = 10",
        source="libsvm", path="bundled:tiny_spiked.libsvm", d=40, k=2, block_size=10,
        solvers=(
            SolverGrid("history", (("m", (1, 3)),)),
            SolverGrid("oja", (("c", (0.1, 1.0, 10.0)),)),
            SolverGrid("oja_pp", (("c", (1.0,)),)),
            SolverGrid("block_power"),
            SolverGrid("dbpca"),
        ),
        seeds=(0, 1), metric="explained_variance", eval_every=2,
    ))
    return presets


def get_preset(name: str) -> ExperimentSpec:
    for p in builtin_presets():
        if p.name == name:
            return p
    raise KeyError(name)
