import math
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from histpca.bench import cli
from histpca.bench.presets import OJA_C_GRID, builtin_presets, get_preset
from histpca.bench.runner import (
    CSV_HEADER,
    TraceRecord,
    counting_hook,
    read_csv,
    records_to_csv,
    run_experiment,
    summarize,
    write_csv,
)
from histpca.bench.spec import ExperimentSpec, SolverGrid, dump_config, load_config, parse_assignments
from histpca.bench.svg import build_svg, render_svg
from histpca.exceptions import SpecError
from histpca.ingest import write_libsvm

SMALL = """
name = small
source = spiked
d = 12
sigma = 0.3
n_samples = 400
k = 2
block_size = 10
eval_every = 5
seeds = 0, 1
solvers = history, oja, block_power, dbpca
history.m = 1, 3
oja.c = 0.1, 1, 10
"""


def _small():
    return parse_assignments(SMALL.splitlines())


# ---------------------------------------------------------------- spec / config


def test_parse_config_fields_and_grids():
    spec = _small()
    assert (spec.name, spec.d, spec.k, spec.n_samples, spec.seeds) == ("small", 12, 2, 400, (0, 1))
    digests = [(c.algorithm, c.digest()) for c in spec.solver_configs()]
    assert digests == [("history", "m=1"), ("history", "m=3"), ("oja", "c=0.1"), ("oja", "c=1"),
                       ("oja", "c=10"), ("block_power", "default"), ("dbpca", "default")]
    assert spec.resolved_metric == "principal_angle"


def test_dump_and_reload_round_trip(tmp_path):
    spec = _small()
    p = tmp_path / "s.config"
    p.write_text(dump_config(spec))
    again = load_config(p)
    assert again == spec
    assert dump_config(again) == dump_config(spec)


def test_overrides_apply_on_top_of_a_preset():
    spec = parse_assignments(["n_samples = 50", "seeds = 3", "oja.c = 1"], base=get_preset("fig2-panel-a"))
    assert spec.n_samples == 50 and spec.seeds == (3,)
    assert [c.c for c in spec.solver_configs() if c.algorithm == "oja"] == [1.0]


@pytest.mark.parametrize("lines", [
    ["name = x", "seeds =", "solvers = history", "d = 5", "n_samples = 10"],
    ["name = x", "solvers = history", "d = 5", "n_samples = 10", "seeds = 1, 1"],
    ["name = x", "seeds = 0", "d = 5", "n_samples = 10"],
    ["name = x", "seeds = 0", "solvers = history", "d = 5", "n_samples = 10", "k = 5"],
    ["name = x", "seeds = 0", "solvers = oja", "d = 5", "n_samples = 10"],
    ["name = x", "seeds = 0", "solvers = history", "d = 5", "n_samples = 10", "history.c = 1"],
    ["name = x", "seeds = 0", "solvers = history", "d = 5", "n_samples = 10", "sigma = -1"],
    ["name = x", "seeds = 0", "solvers = history", "d = 5"],
    ["name = x y", "seeds = 0", "solvers = history", "d = 5", "n_samples = 10"],
    ["name = x", "seeds = 0", "solvers = history", "source = libsvm", "path = /does/not/exist"],
    ["name = x", "seeds = 0", "solvers = history", "source = docword",
     "path = bundled:nips_like.docword.txt.gz", "metric = principal_angle"],
    ["name = x", "seeds = 0", "solvers = vr_pca", "d = 5", "n_samples = 10", "k = 2"],
    ["name = x", "seeds = 0", "solvers = vr_pca", "d = 5", "n_samples = 10", "vr_pca.eta = fastest"],
    ["name = x", "seeds = 0", "solvers = history", "d = 5", "n_samples = 10", "metric = accuracy"],
    ["name = x", "seeds = 0", "solvers = history", "d = 5", "n_samples = 10", "history.m = 0"],
])
def test_invalid_specs_are_rejected(lines):
    with pytest.raises(SpecError):
        parse_assignments(lines).validate()


@pytest.mark.parametrize("lines", [
    ["name = x", "bogus = 1"], ["name = x", "solvers = lanczos"], ["name = x", "d = five"],
    ["name = x", "no equals sign"], ["d = 5"], ["name = x", "d = 2.5"],
])
def test_malformed_config_lines(lines):
    with pytest.raises(SpecError):
        parse_assignments(lines)


def test_zero_seeds_fail_before_any_run(tmp_path):
    spec = ExperimentSpec("z", d=5, n_samples=10, solvers=(SolverGrid("history"),), seeds=())
    with pytest.raises(SpecError):
        run_experiment(spec, tmp_path)
    assert list(tmp_path.iterdir()) == []


# ---------------------------------------------------------------- presets


def test_preset_inventory():
    presets = builtin_presets()
    names = [p.name for p in presets]
    assert len(presets) >= 22
    assert len(set(names)) == len(names)
    assert sum(n.startswith("fig2-panel-") for n in names) == 15
    assert sum(n.startswith("fig3-panel-") for n in names) == 9
    assert {"fig1-m-sweep", "multipass", "ci-libsvm"} <= set(names)
    for p in presets:
        p.validate()


def test_panel_captions():
    caps = {p.name: p.description for p in builtin_presets()}
    assert caps["fig2-panel-a"] == "d = 100, B = 10, k = 1, sig = 0.1"
    assert caps["fig2-panel-b"] == "d = 100, B = 10, k = 1, sig = 0.5"
    assert caps["fig2-panel-f"] == "d = 100, B = 10, k = 5, sig = 0.8"
    assert caps["fig2-panel-o"] == "d = 100, B = 100, k = 10, sig = 0.8"
    assert caps["fig3-panel-a"] == "d = 1000, B = 100, k = 1, sig = 0.1"
    assert caps["fig3-panel-i"] == "d = 1000, B = 100, k = 10, sig = 0.8"
    pat = re.compile(r"^d = (\d+), B = (\d+), k = (\d+), sig = ([\d.]+)$")
    for p in builtin_presets():
        if p.name.startswith("fig2") or p.name.startswith("fig3"):
            d, B, k, s = pat.match(p.description).groups()
            assert (int(d), int(B), int(k), float(s)) == (p.d, p.block_size, p.k, p.sigma)
            assert p.n_samples == 10_000


def test_figure_presets_use_the_power_of_ten_grid():
    assert OJA_C_GRID == tuple(10.0 ** j for j in range(-6, 5))
    spec = get_preset("fig2-panel-e")
    algs = {g.algorithm for g in spec.solvers}
    assert algs == {"history", "block_power", "dbpca", "oja", "oja_pp"}
    assert "oja_pp" not in {g.algorithm for g in get_preset("fig2-panel-b").solvers}


def test_m_sweep_preset():
    spec = get_preset("fig1-m-sweep")
    assert [c.m for c in spec.solver_configs()] == [1, 3, 5, 7]
    assert spec.resolved_metric == "explained_variance"


# ---------------------------------------------------------------- runner / CSV


def test_csv_round_trip(tmp_path):
    recs = [TraceRecord("s", "oja", "c=1e-06", 3, 10, "principal_angle", 0.1 + 0.2, 0),
            TraceRecord("s", "oja", "c=1e-06", 3, 20, "diverged", math.nan, 5)]
    p = tmp_path / "t.csv"
    write_csv(recs, p)
    back = read_csv(p)
    assert back[0] == recs[0]
    assert math.isnan(back[1].value) and back[1].metric == "diverged"
    assert p.read_text().splitlines()[0] == ",".join(CSV_HEADER)


def test_read_csv_rejects_foreign_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(p)


def test_run_small_experiment(tmp_path):
    res = run_experiment(_small(), tmp_path)
    recs = res.records
    assert not res.diverged
    by_series = {}
    for r in recs:
        by_series.setdefault((r.algorithm, r.config, r.seed), []).append(r.samples_seen)
    assert len(by_series) == 7 * 2
    for ns in by_series.values():
        assert all(b > a for a, b in zip(ns, ns[1:]))
        assert ns[-1] == 400
        assert ns[0] == 50
    assert all(0.0 <= r.value <= 1.0 for r in recs)
    assert all(r.ms == 0 for r in recs)
    assert read_csv(res.paths["csv"]) == recs
    assert load_config(res.paths["config"]) == _small()
    summary = (tmp_path / "small.summary.csv").read_text().splitlines()
    assert summary[0] == "algorithm,config,median_final,rank,selected"
    assert sum(",best" in line for line in summary) == 1


def test_identical_invocations_write_identical_bytes(tmp_path):
    a = run_experiment(_small(), tmp_path / "a", jobs=2)
    b = run_experiment(_small(), tmp_path / "b", jobs=1)
    for kind in ("csv", "config", "summary"):
        with open(a.paths[kind], "rb") as fa, open(b.paths[kind], "rb") as fb:
            assert fa.read() == fb.read()


def test_streaming_solvers_read_each_sample_once(tmp_path):
    counts = []
    spec = _small().with_seeds([0])
    run_experiment(spec, None, stream_hook=counting_hook(counts))
    assert len(counts) == len(spec.solver_configs())
    for c in counts:
        assert c == [1] * 400


def test_multi_pass_scenario_reads_once_per_pass():
    counts = []
    spec = parse_assignments(["passes = 3", "solvers = history", "seeds = 0"], base=_small())
    res = run_experiment(spec, None, stream_hook=counting_hook(counts))
    assert len(counts) == 3 * 2
    assert all(c == [1] * 400 for c in counts)
    assert res.records[-1].samples_seen == 1200


def test_batch_solvers_and_unnormalized_error():
    spec = ExperimentSpec("mp", d=8, sigma=0.3, n_samples=300, block_size=10, passes=3, eval_every=10,
                          solvers=(SolverGrid("history"), SolverGrid("power_batch"),
                                   SolverGrid("vr_pca", (("eta", ("mean_norm_sqrt_n",)),))),
                          metric="unnormalized_error")
    recs = run_experiment(spec).records
    finals = {r.algorithm: r for r in recs}
    assert finals["power_batch"].samples_seen == 900
    assert finals["vr_pca"].samples_seen == 1800
    assert finals["history"].samples_seen == 900
    assert all(r.value > -1e-6 for r in recs)
    pb = [r.value for r in recs if r.algorithm == "power_batch"]
    assert all(b <= a + 1e-9 for a, b in zip(pb, pb[1:]))


def test_divergence_is_recorded_and_does_not_abort(tmp_path):
    path = tmp_path / "huge.libsvm"
    rng = np.random.default_rng(0)
    rows = [(np.arange(4), rng.standard_normal(4) * 1e150) for _ in range(40)]
    write_libsvm(rows, path)
    spec = ExperimentSpec("div", source="libsvm", path=str(path), d=4, k=1, block_size=10, eval_every=1,
                          solvers=(SolverGrid("oja", (("c", (1e100, 1.0)),)), SolverGrid("history")),
                          metric="explained_variance")
    res = run_experiment(spec, tmp_path)
    assert res.diverged
    div = [r for r in res.records if r.metric == "diverged"]
    assert len(div) == 1 and div[0].config == "c=1e+100" and math.isnan(div[0].value)
    assert any(r.algorithm == "history" for r in res.records)
    rows = {r.config: r for r in summarize(res.records)}
    assert math.isnan(rows["c=1e+100"].median_final)
    assert rows["c=1"].selected == "best"


def test_summary_ranks_oja_family_by_median_final():
    recs = []
    for c, vals in (("c=1", (0.3, 0.2, 0.4)), ("c=10", (0.1, 0.05, 0.2)), ("c=100", (0.5, 0.6, 0.7)),
                    ("c=0.1", (0.9, 0.9, 0.9))):
        for seed, v in enumerate(vals):
            recs.append(TraceRecord("s", "oja", c, seed, 100, "principal_angle", v))
    recs.append(TraceRecord("s", "history", "m=3", 0, 100, "principal_angle", 0.01))
    rows = {(r.algorithm, r.config): r for r in summarize(recs)}
    assert rows[("oja", "c=10")].selected == "best"
    assert rows[("oja", "c=1")].selected == "top3" and rows[("oja", "c=100")].selected == "top3"
    assert rows[("oja", "c=0.1")].selected == "" and rows[("oja", "c=0.1")].rank == 4
    assert rows[("history", "m=3")].rank == 0


def test_explained_variance_ranking_prefers_larger():
    recs = [TraceRecord("s", "oja", "c=1", 0, 10, "explained_variance", 0.2),
            TraceRecord("s", "oja", "c=10", 0, 10, "explained_variance", 0.3)]
    assert {r.config: r.selected for r in summarize(recs)}["c=10"] == "best"


# ---------------------------------------------------------------- SVG


def _polylines(svg):
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    out = {}
    for pl in root.iter(ns + "polyline"):
        pts = [tuple(map(float, p.split(","))) for p in pl.get("points").split()]
        out[pl.get("data-series")] = pts
    return root, out


def test_empty_trace_gives_valid_axes(tmp_path):
    p = tmp_path / "empty.csv"
    write_csv([], p)
    out = render_svg(p)
    root, lines = _polylines(open(out).read())
    assert root.tag.endswith("svg")
    assert lines == {}
    assert any(el.get("class") == "axes" for el in root.iter())


def test_monotone_series_gives_monotone_path():
    recs = [TraceRecord("s", "history", "m=3", 0, n, "principal_angle", 1.0 / n) for n in range(10, 500, 10)]
    _, lines = _polylines(build_svg(recs))
    pts = lines["history m=3"]
    xs, ys = zip(*pts)
    assert all(b > a for a, b in zip(xs, xs[1:]))
    # decreasing values sit lower on the page, i.e. larger y
    assert all(b > a for a, b in zip(ys, ys[1:]))


def test_svg_is_deterministic_and_keeps_three_oja_configs(tmp_path):
    recs = []
    for j, c in enumerate(("c=0.1", "c=1", "c=10", "c=100", "c=1000")):
        for n in (10, 20):
            recs.append(TraceRecord("s", "oja", c, 0, n, "principal_angle", 0.1 * (j + 1) / n))
    recs.append(TraceRecord("s", "dbpca", "default", 0, 20, "principal_angle", 0.5))
    a, b = build_svg(recs, "t"), build_svg(recs, "t")
    assert a == b
    _, lines = _polylines(a)
    assert set(lines) == {"oja c=0.1", "oja c=1", "oja c=10", "dbpca"}


def test_preset_smoke_run_writes_csv_and_svg(tmp_path):
    spec = parse_assignments(["n_samples = 2000", "seeds = 0, 1"], base=get_preset("fig2-panel-b"))
    res = run_experiment(spec, tmp_path, svg=True)
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == ["fig2-panel-b.config", "fig2-panel-b.csv", "fig2-panel-b.summary.csv", "fig2-panel-b.svg"]
    algs = {r.algorithm for r in res.records}
    assert algs == {"history", "block_power", "dbpca", "oja"}
    _, lines = _polylines(open(res.paths["svg"]).read())
    assert sum(k.startswith("oja ") for k in lines) == 3
    assert {"history m=3", "block_power", "dbpca"} <= set(lines)


# ---------------------------------------------------------------- CLI


def test_cli_list_presets(capsys):
    assert cli.main(["list-presets"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == len(builtin_presets())
    assert out[1].startswith("fig2-panel-b")


def test_cli_run_config_and_render(tmp_path, capsys):
    cfg = tmp_path / "small.config"
    cfg.write_text(SMALL)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--svg", "--seed-base", "10"]) == 0
    recs = read_csv(out / "small.csv")
    assert {r.seed for r in recs} == {10, 11}
    assert (out / "small.svg").exists()
    assert cli.main(["render", str(out / "small.csv"), "--out", str(tmp_path / "r.svg")]) == 0
    assert (tmp_path / "r.svg").read_text() == (out / "small.svg").read_text()


def test_cli_set_overrides(tmp_path):
    assert cli.main(["run", "--preset", "ci-libsvm", "--out", str(tmp_path), "--set", "seeds=5",
                     "--set", "solvers=history"]) == 0
    recs = read_csv(tmp_path / "ci-libsvm.csv")
    assert {r.seed for r in recs} == {5} and {r.algorithm for r in recs} == {"history"}


@pytest.mark.parametrize("argv", [
    ["run", "--preset", "no-such-preset"],
    ["run", "--preset", "ci-libsvm", "--set", "k=0"],
    ["run", "--preset", "ci-libsvm", "--set", "seeds="],
    ["run", "--preset", "ci-libsvm", "--jobs", "0"],
    ["run", "--config", "/no/such/file.config"],
])
def test_cli_validation_errors_exit_2(argv, tmp_path, capsys):
    assert cli.main(argv + ["--out", str(tmp_path)]) == 2
    assert "bench:" in capsys.readouterr().err
    assert not (tmp_path / "ci-libsvm.csv").exists()


def test_cli_divergence_exit_codes(tmp_path):
    path = tmp_path / "huge.libsvm"
    write_libsvm([(np.arange(3), np.full(3, 1e150))] * 20, path)
    cfg = tmp_path / "div.config"
    cfg.write_text(f"name = div\nsource = libsvm\npath = {path}\nd = 3\nseeds = 0\n"
                   "solvers = oja\noja.c = 1e100\nmetric = explained_variance\n")
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--allow-diverged"]) == 0


def test_cli_render_missing_file(tmp_path):
    assert cli.main(["render", str(tmp_path / "missing.csv")]) == 2


def test_records_to_csv_uses_repr_floats():
    text = records_to_csv([TraceRecord("s", "h", "m=3", 0, 1, "principal_angle", 0.1 + 0.2)])
    assert text.splitlines()[1].endswith(",0.30000000000000004,0")
