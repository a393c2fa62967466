"""Benchmark harness: experiment specs, presets, runner, traces and plots."""

from .memory import MemoryReport, analytic_entries, measure_history_update
from .presets import builtin_presets, get_preset
from .runner import (
    CSV_HEADER,
    ExperimentResult,
    TraceRecord,
    read_csv,
    run_experiment,
    run_single,
    summarize,
    write_csv,
)
from .spec import ExperimentSpec, SolverGrid, dump_config, load_config, parse_assignments
from .svg import build_svg, render_svg

__all__ = [
    "MemoryReport", "analytic_entries", "measure_history_update", "builtin_presets", "get_preset",
    "CSV_HEADER", "ExperimentResult", "TraceRecord", "read_csv", "run_experiment", "run_single",
    "summarize", "write_csv", "ExperimentSpec", "SolverGrid", "dump_config", "load_config",
    "parse_assignments", "build_svg", "render_svg",
]
