"""
Experiment definitions and the flat ``key = value`` config format.

Example config::

    name = my-run
    source = spiked          # spiked | libsvm | docword
    d = 100
    sigma = 0.5
    n_samples = 10000
    k = 1
    block_size = 10
    seeds = 0, 1, 2
    solvers = history, oja
    history.m = 1, 3
    oja.c = 0.1, 1, 10

Per-solver keys ``<algorithm>.<param>`` take comma-separated grids.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, replace

from ..exceptions import SpecError
from ..ingest import resolve_path
from ..metrics import METRIC_NAMES
from ..solvers.base import ALGORITHMS, BATCH, SolverConfig

SOURCE_KINDS = ("spiked", "libsvm", "docword")
SOLVER_PARAMS = {
    "history": ("m", "tol", "track_lambda"),
    "oja": ("c",),
    "oja_pp": ("c",),
    "block_power": (),
    "dbpca": (),
    "power_batch": (),
    "vr_pca": ("eta",),
}
ETA_RULES = ("mean_norm", "mean_norm_sqrt_n")


@dataclass(frozen=True)
class SolverGrid:
    algorithm: str
    params: tuple = ()  # ((name, (v1, v2, ...)), ...)

    def configs(self, k: int, B: int, d: int | None):
        names = [p for p, _ in self.params]
        grids = [vals for _, vals in self.params]
        for combo in itertools.product(*grids) if grids else [()]:
            kw = dict(zip(names, combo))
            yield SolverConfig(self.algorithm, k=k, B=B, d=d, **kw)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    source: str = "spiked"
    d: int | None = None
    sigma: float = 0.5
    n_samples: int | None = None
    path: str | None = None
    k: int = 1
    block_size: int = 10
    solvers: tuple = ()
    seeds: tuple = (0,)
    metric: str | None = None
    eval_every: int = 10
    passes: int = 1
    eval_samples: int = 10_000
    description: str = ""

    @property
    def resolved_metric(self) -> str:
        if self.metric:
            return self.metric
        return "principal_angle" if self.source == "spiked" else "explained_variance"

    def solver_configs(self):
        out = []
        for grid in self.solvers:
            out.extend(grid.configs(self.k, self.block_size, self.d))
        return out

    def with_seeds(self, seeds) -> "ExperimentSpec":
        return replace(self, seeds=tuple(int(s) for s in seeds))

    def validate(self) -> "ExperimentSpec":
        if not self.name or any(ch in self.name for ch in "/\\, \t"):
            raise SpecError(f"scenario name {self.name!r} must be non-empty without separators or spaces")
        if self.source not in SOURCE_KINDS:
            raise SpecError(f"source must be one of {SOURCE_KINDS}, got {self.source!r}")
        if not self.solvers:
            raise SpecError("at least one solver is required")
        if not self.seeds:
            raise SpecError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise SpecError("seeds must be distinct")
        if self.block_size < 1:
            raise SpecError("block_size must be >= 1")
        if self.eval_every < 1:
            raise SpecError("eval_every must be >= 1")
        if self.passes < 1:
            raise SpecError("passes must be >= 1")
        if self.k < 1:
            raise SpecError("k must be >= 1")
        metric = self.resolved_metric
        if metric not in METRIC_NAMES:
            raise SpecError(f"metric must be one of {METRIC_NAMES}, got {metric!r}")
        if self.source == "spiked":
            if self.d is None or self.d < 2:
                raise SpecError("spiked source needs d >= 2")
            if not self.k < self.d:
                raise SpecError(f"need k < d, got k={self.k}, d={self.d}")
            if self.sigma < 0:
                raise SpecError("sigma must be non-negative")
            if self.n_samples is None or self.n_samples < 1:
                raise SpecError("spiked source needs n_samples >= 1")
            if self.eval_samples < 1:
                raise SpecError("eval_samples must be >= 1")
        else:
            if not self.path:
                raise SpecError(f"{self.source} source needs a path")
            if not os.path.exists(resolve_path(self.path)):
                raise SpecError(f"data file not found: {self.path}")
            if metric == "principal_angle":
                raise SpecError("principal_angle needs a known ground truth (spiked source)")
            if self.d is not None and self.source == "docword":
                raise SpecError("docword files carry their own dimension; drop d")
        for grid in self.solvers:
            if grid.algorithm not in ALGORITHMS:
                raise SpecError(f"unknown solver {grid.algorithm!r}")
            allowed = SOLVER_PARAMS[grid.algorithm]
            for pname, vals in grid.params:
                if pname not in allowed:
                    raise SpecError(f"{grid.algorithm} has no parameter {pname!r}")
                if not vals:
                    raise SpecError(f"{grid.algorithm}.{pname} grid is empty")
            if grid.algorithm in ("oja", "oja_pp") and "c" not in dict(grid.params):
                raise SpecError(f"{grid.algorithm} needs a c grid")
            if grid.algorithm == "vr_pca" and self.k != 1:
                raise SpecError("vr_pca is rank-1 only")
            for pname, vals in grid.params:
                if pname == "eta":
                    for v in vals:
                        if isinstance(v, str) and v not in ETA_RULES:
                            raise SpecError(f"eta must be a number or one of {ETA_RULES}")
        try:
            self.solver_configs()
        except (TypeError, ValueError) as exc:
            raise SpecError(str(exc)) from exc
        if any(g.algorithm in BATCH for g in self.solvers) and self.source == "spiked" and self.n_samples is None:
            raise SpecError("batch solvers need a finite dataset")
        return self


# --------------------------------------------------------------------------
# flat key = value format

_SCALAR_KEYS = {
    "name": str, "description": str, "source": str, "d": int, "sigma": float,
    "n_samples": int, "path": str, "k": int, "block_size": int, "metric": str,
    "eval_every": int, "passes": int, "eval_samples": int,
}
_KEY_ORDER = ["name", "description", "source", "path", "d", "sigma", "n_samples", "k",
              "block_size", "metric", "eval_every", "passes", "eval_samples", "seeds", "solvers"]


def _parse_value(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "on", "yes"):
        return True
    if low in ("false", "off", "no"):
        return False
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def _parse_int(key, text):
    try:
        return int(text)
    except ValueError:
        try:
            f = float(text)
        except ValueError:
            raise SpecError(f"{key}: expected an integer, got {text!r}") from None
        if not f.is_integer():
            raise SpecError(f"{key}: expected an integer, got {text!r}")
        return int(f)


def parse_assignments(lines, base: ExperimentSpec | None = None) -> ExperimentSpec:
    """Apply ``key = value`` lines on top of ``base`` (or an empty spec)."""
    fields = {} if base is None else _to_fields(base)
    grids = dict(fields.pop("_grids", {}))
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SpecError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key = key.strip()
        value = value.strip()
        if key in _SCALAR_KEYS:
            caster = _SCALAR_KEYS[key]
            if value.lower() in ("", "none"):
                fields[key] = None
            elif caster is int:
                fields[key] = _parse_int(key, value)
            elif caster is float:
                try:
                    fields[key] = float(value)
                except ValueError:
                    raise SpecError(f"{key}: expected a number, got {value!r}") from None
            else:
                fields[key] = value
        elif key == "seeds":
            fields["seeds"] = tuple(_parse_int("seeds", s) for s in value.split(",") if s.strip())
        elif key == "solvers":
            names = [s.strip() for s in value.split(",") if s.strip()]
            for n in names:
                if n not in ALGORITHMS:
                    raise SpecError(f"line {lineno}: unknown solver {n!r}")
            grids = {n: grids.get(n, {}) for n in names}
        elif "." in key:
            alg, pname = key.split(".", 1)
            if alg not in ALGORITHMS:
                raise SpecError(f"line {lineno}: unknown solver {alg!r}")
            vals = tuple(_parse_value(v) for v in value.split(",") if v.strip())
            grids.setdefault(alg, {})[pname] = vals
        else:
            raise SpecError(f"line {lineno}: unknown key {key!r}")
    fields["solvers"] = tuple(SolverGrid(alg, tuple(sorted(ps.items()))) for alg, ps in grids.items())
    if not fields.get("name"):
        raise SpecError("config needs a name")
    if fields.get("description") is None:
        fields["description"] = ""
    for key in ("sigma", "block_size", "k", "eval_every", "passes", "eval_samples", "source"):
        if key in fields and fields[key] is None:
            del fields[key]
    try:
        return ExperimentSpec(**fields)
    except TypeError as exc:
        raise SpecError(str(exc)) from exc


def _to_fields(spec: ExperimentSpec) -> dict:
    out = {k: getattr(spec, k) for k in _SCALAR_KEYS}
    out["seeds"] = spec.seeds
    out["_grids"] = {g.algorithm: dict(g.params) for g in spec.solvers}
    return out


def load_config(path) -> ExperimentSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_assignments(fh.readlines())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "on" if v else "off"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(spec: ExperimentSpec) -> str:
    """Serialize to the flat format; ``parse_assignments`` reads it back."""
    lines = []
    for key in _KEY_ORDER:
        if key == "seeds":
            lines.append("seeds = " + ", ".join(str(s) for s in spec.seeds))
        elif key == "solvers":
            lines.append("solvers = " + ", ".join(g.algorithm for g in spec.solvers))
            for g in spec.solvers:
                for pname, vals in g.params:
                    lines.append(f"{g.algorithm}.{pname} = " + ", ".join(_fmt(v) for v in vals))
        else:
            v = getattr(spec, key)
            if v is None:
                continue
            lines.append(f"{key} = {_fmt(v)}")
    return "\n".join(lines) + "\n"
