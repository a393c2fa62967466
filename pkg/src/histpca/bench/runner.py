"""
Experiment execution and trace files.

Every (solver config, seed) pair is an independent run on a fresh stream.
All algorithms sharing a seed see the same data: the spiked model, the sample
stream and the held-out evaluation set are seeded from ``(seed, 0)``,
``(seed, 1)`` and ``(seed, 3)``; solver randomness from ``(seed, 2)``.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import median

import numpy as np

from ..datagen import make_rng, make_spiked_model, sample_rows
from ..exceptions import DivergenceError, SpecError
from ..ingest import CountingStream, DocwordSource, LibsvmSource, SyntheticSource, materialize
from ..metrics import explained_variance, principal_angle_distance, unnormalized_error
from ..solvers import STREAMING, SolverConfig, exact_eig_oracle, make_solver, power_method_batch, vr_pca
from .spec import ExperimentSpec, dump_config

CSV_HEADER = ("scenario", "algorithm", "config", "seed", "samples_seen", "metric", "value", "ms")
OJA_FAMILY = ("oja", "oja_pp")
LOWER_IS_BETTER = {"principal_angle": True, "unnormalized_error": True, "explained_variance": False}
DIVERGED = "diverged"


@dataclass(frozen=True)
class TraceRecord:
    scenario: str
    algorithm: str
    config: str
    seed: int
    samples_seen: int
    metric: str
    value: float
    ms: int = 0

    def row(self):
        return (self.scenario, self.algorithm, self.config, str(self.seed), str(self.samples_seen),
                self.metric, repr(float(self.value)), str(self.ms))


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: list
    paths: dict = field(default_factory=dict)

    @property
    def diverged(self) -> bool:
        return any(r.metric == DIVERGED for r in self.records)


# --------------------------------------------------------------------------
# data and evaluation context


def build_source(spec: ExperimentSpec, seed: int):
    """(source, spiked model or None) for one seed."""
    if spec.source == "spiked":
        model = make_spiked_model(spec.d, spec.k, spec.sigma, seed=_mix(seed, 0))
        return SyntheticSource(model, (seed, 1), spec.n_samples), model
    if spec.source == "libsvm":
        return LibsvmSource(spec.path, spec.d), None
    return DocwordSource(spec.path), None


def _mix(seed, stream):
    # one integer seed per (seed, stream) pair for make_spiked_model
    return int(np.random.SeedSequence((seed, stream)).generate_state(1, dtype=np.uint64)[0] >> 1)


class Evaluator:
    """Computes the scenario metric for a basis."""

    def __init__(self, spec: ExperimentSpec, seed: int, source, model):
        self.metric = spec.resolved_metric
        self.model = model
        self.data = None
        self.lambda_max = None
        if self.metric == "explained_variance":
            if model is not None:
                self.data = sample_rows(model, spec.eval_samples, make_rng((seed, 3)))
            else:
                self.data = materialize(source)
        elif self.metric == "unnormalized_error":
            if source.n_samples is None:
                raise SpecError("unnormalized_error needs a finite dataset")
            self.data = materialize(source)
            self.lambda_max = top_gram_eigenvalue(self.data)

    def __call__(self, Q) -> float:
        if self.metric == "principal_angle":
            return principal_angle_distance(self.model.U, Q)
        if self.metric == "explained_variance":
            return explained_variance(Q, self.data)
        return unnormalized_error(np.asarray(Q).reshape(Q.shape[0], -1)[:, 0], self.data, self.lambda_max)


def top_gram_eigenvalue(X) -> float:
    """Largest eigenvalue of ``X^T X``: Jacobi oracle for d <= 64, else a long power run."""
    d = X.shape[1]
    if d <= 64:
        G = X.T @ X
        G = G.toarray() if hasattr(G, "toarray") else np.asarray(G)
        return float(exact_eig_oracle(G).eigenvalues[0])
    est = power_method_batch(X, 1, iters=500, rng=make_rng(12345))
    return float(est.lam[0]) * X.shape[0]


# --------------------------------------------------------------------------
# single run


def run_single(spec: ExperimentSpec, cfg: SolverConfig, seed: int, timing: bool = False,
               stream_hook=None) -> list:
    """Trace records for one (config, seed) pair.

    ``stream_hook(stream)`` may wrap each opened BlockStream (e.g. a
    CountingStream) for instrumentation.
    """
    source, model = build_source(spec, seed)
    evaluate = Evaluator(spec, seed, source, model)
    rng = make_rng((seed, 2))
    digest = cfg.digest()
    records = []
    t0 = time.perf_counter()

    def emit(samples, value, metric=evaluate.metric):
        ms = int(round((time.perf_counter() - t0) * 1000)) if timing else 0
        if records and records[-1].samples_seen >= samples and metric != DIVERGED:
            return
        records.append(TraceRecord(spec.name, cfg.algorithm, digest, seed, int(samples), metric, float(value), ms))

    if cfg.algorithm in STREAMING:
        n_blocks = None
        if cfg.algorithm == "oja_pp" and source.n_samples is not None:
            n_blocks = math.ceil(source.n_samples / spec.block_size) * spec.passes
        solver = make_solver(cfg, source.d, rng, n_blocks=n_blocks)
        for _ in range(spec.passes):
            stream = source.open(spec.block_size)
            if stream_hook is not None:
                stream = stream_hook(stream)
            for block in stream:
                solver.partial_fit(block)
                if solver.diverged:
                    emit(solver.samples_seen, math.nan, DIVERGED)
                    return records
                if solver.blocks_seen % spec.eval_every == 0:
                    emit(solver.samples_seen, evaluate(solver.Q))
            if solver.blocks_seen == 0:
                break
            emit(solver.samples_seen, evaluate(solver.Q))
        return records

    N = source.n_samples
    try:
        if cfg.algorithm == "power_batch":
            def on_iter(it, est):
                emit(it * N, evaluate(est.Q))
            power_method_batch(source, cfg.k, spec.passes, rng, callback=on_iter)
        else:
            evals = max(1, min(50, math.ceil(N / spec.block_size / spec.eval_every)))

            def on_step(accessed, w):
                emit(accessed, evaluate(w[:, None]))
            vr_pca(source, spec.passes, eta=cfg.eta, rng=rng, callback=on_step, evals_per_epoch=evals)
    except DivergenceError:
        last = records[-1].samples_seen if records else 0
        emit(last + 1, math.nan, DIVERGED)
    return records


def _run_task(args):
    spec, cfg, seed, timing = args
    return run_single(spec, cfg, seed, timing)


# --------------------------------------------------------------------------
# experiment


def run_experiment(spec: ExperimentSpec, out_dir=None, jobs: int = 1, svg: bool = False,
                   timing: bool = False, stream_hook=None) -> ExperimentResult:
    """Run every (config, seed) pair of ``spec``; optionally write files to ``out_dir``.

    Writes ``<name>.csv``, ``<name>.config`` (resolved config),
    ``<name>.summary.csv`` and, with ``svg=True``, ``<name>.svg``.
    """
    spec.validate()
    tasks = [(spec, cfg, seed, timing) for cfg in spec.solver_configs() for seed in spec.seeds]
    if stream_hook is not None or jobs <= 1 or len(tasks) == 1:
        chunks = [run_single(s, c, sd, t, stream_hook) for s, c, sd, t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_task, tasks))
    records = [r for chunk in chunks for r in chunk]
    result = ExperimentResult(spec, records)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        base = os.path.join(out_dir, spec.name)
        write_csv(records, base + ".csv")
        with open(base + ".config", "w", encoding="utf-8") as fh:
            fh.write(dump_config(spec))
        write_summary(summarize(records), base + ".summary.csv")
        result.paths = {"csv": base + ".csv", "config": base + ".config", "summary": base + ".summary.csv"}
        if svg:
            from .svg import render_svg

            result.paths["svg"] = render_svg(base + ".csv", base + ".svg", title=spec.description or spec.name)
    return result


# --------------------------------------------------------------------------
# CSV


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def write_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(records_to_csv(records))


def read_csv(path) -> list:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        out = []
        for row in reader:
            if not row:
                continue
            sc, alg, cfg, seed, n, metric, value, ms = row
            out.append(TraceRecord(sc, alg, cfg, int(seed), int(n), metric, float(value), int(ms)))
        return out


# --------------------------------------------------------------------------
# reductions


def series(records):
    """Group records into {(algorithm, config): {seed: [(samples, value), ...]}}."""
    out = {}
    for r in records:
        if r.metric == DIVERGED:
            continue
        out.setdefault((r.algorithm, r.config), {}).setdefault(r.seed, []).append((r.samples_seen, r.value))
    return out


def final_values(records):
    """{(algorithm, config): {seed: final value}}; diverged runs map to nan."""
    out = {}
    for r in records:
        slot = out.setdefault((r.algorithm, r.config), {})
        slot[r.seed] = math.nan if r.metric == DIVERGED else r.value
    return out


@dataclass(frozen=True)
class SummaryRow:
    algorithm: str
    config: str
    median_final: float
    rank: int
    selected: str  # "best", "top3" or ""


def summarize(records) -> list:
    """Median final value per (algorithm, config); Oja-family configs ranked by it."""
    if not records:
        return []
    metric = next((r.metric for r in records if r.metric != DIVERGED), "principal_angle")
    lower = LOWER_IS_BETTER.get(metric, True)
    finals = final_values(records)
    meds = {}
    for key, by_seed in finals.items():
        vals = list(by_seed.values())
        meds[key] = math.nan if any(math.isnan(v) for v in vals) else median(vals)
    rows = []
    for key in sorted(meds):
        alg, cfg = key
        rank, sel = 0, ""
        if alg in OJA_FAMILY:
            peers = [k for k in meds if k[0] == alg and not math.isnan(meds[k])]
            peers.sort(key=lambda k: (meds[k] if lower else -meds[k], k[1]))
            if key in peers:
                rank = peers.index(key) + 1
                sel = "best" if rank == 1 else ("top3" if rank <= 3 else "")
        rows.append(SummaryRow(alg, cfg, meds[key], rank, sel))
    return rows


def best_config(records, algorithm: str):
    for row in summarize(records):
        if row.algorithm == algorithm and row.selected == "best":
            return row.config
    return None


def write_summary(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("algorithm", "config", "median_final", "rank", "selected"))
        for r in rows:
            w.writerow((r.algorithm, r.config, repr(float(r.median_final)), r.rank, r.selected))


def counting_hook(counts_by_pass: list):
    """Stream hook that records per-sample emission counts, one list per opened stream."""

    def hook(stream):
        counts = []
        counts_by_pass.append(counts)
        return CountingStream(stream, counts)

    return hook
