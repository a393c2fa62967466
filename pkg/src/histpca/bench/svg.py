"""
Dependency-free SVG line charts of trace CSVs.

One polyline per (algorithm, config) tracing the per-checkpoint median over
seeds, on a log-scaled y axis. For the Oja family only the three best
configurations (by median final value) are drawn.
"""

from __future__ import annotations

import math
from statistics import median
from xml.sax.saxutils import escape

from .runner import OJA_FAMILY, read_csv, series, summarize

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=190, top=40, bottom=50)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def median_curve(by_seed: dict):
    """Median value at each samples_seen checkpoint shared by at least one seed."""
    points = {}
    for pts in by_seed.values():
        for n, v in pts:
            points.setdefault(n, []).append(v)
    return [(n, median(vs)) for n, vs in sorted(points.items())]


def _selected_keys(records):
    keep = set()
    for row in summarize(records):
        if row.algorithm not in OJA_FAMILY or row.selected in ("best", "top3"):
            keep.add((row.algorithm, row.config))
    return keep


def build_svg(records, title: str = "", ylabel: str | None = None) -> str:
    """SVG document for a list of TraceRecords."""
    curves = []
    keep = _selected_keys(records)
    for key, by_seed in sorted(series(records).items()):
        if key not in keep:
            continue
        pts = [(n, v) for n, v in median_curve(by_seed) if v > 0 and math.isfinite(v)]
        if pts:
            curves.append((key, pts))
    if ylabel is None:
        ylabel = next((r.metric for r in records if r.metric != "diverged"), "value")

    x0, y0 = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    xs = [n for _, pts in curves for n, _ in pts]
    ys = [v for _, pts in curves for _, v in pts]
    xmin, xmax = (min(xs), max(xs)) if xs else (0, 1)
    if xmax == xmin:
        xmax = xmin + 1
    lo = math.floor(math.log10(min(ys))) if ys else -3
    hi = math.ceil(math.log10(max(ys))) if ys else 0
    if hi == lo:
        hi = lo + 1

    def px(n):
        return x0 + pw * (n - xmin) / (xmax - xmin)

    def py(v):
        return y0 + ph * (hi - math.log10(v)) / (hi - lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<rect class="axes" x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for e in range(lo, hi + 1):
        y = py(10.0 ** e)
        out.append(f'<line x1="{x0}" y1="{y:.2f}" x2="{x0 + pw}" y2="{y:.2f}" stroke="#dddddd"/>')
        out.append(f'<text x="{x0 - 6}" y="{y + 4:.2f}" text-anchor="end">1e{e}</text>')
    for j in range(5):
        n = xmin + (xmax - xmin) * j / 4
        x = px(n)
        out.append(f'<text x="{x:.2f}" y="{y0 + ph + 16}" text-anchor="middle">{n:g}</text>')
    out.append(f'<text x="{x0 + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">samples seen</text>')
    out.append(f'<text x="16" y="{y0 + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {y0 + ph / 2:.1f})">{escape(ylabel)} (log)</text>')
    for i, ((alg, cfg), pts) in enumerate(curves):
        colour = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{px(n):.2f},{py(v):.2f}" for n, v in pts)
        label = alg if cfg == "default" else f"{alg} {cfg}"
        out.append(f'<polyline data-series="{escape(label)}" fill="none" stroke="{colour}" '
                   f'stroke-width="1.5" points="{coords}"/>')
        ly = y0 + 14 * i + 8
        lx = x0 + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(csv_path, out_path=None, title: str | None = None) -> str:
    """Render ``csv_path`` to ``out_path`` (default: same stem, ``.svg``); returns the path."""
    csv_path = str(csv_path)
    if out_path is None:
        out_path = (csv_path[:-4] if csv_path.endswith(".csv") else csv_path) + ".svg"
    records = read_csv(csv_path)
    if title is None:
        title = records[0].scenario if records else ""
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(build_svg(records, title))
    return str(out_path)
