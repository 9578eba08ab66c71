"""CSV and SVG emission for experiment results.

Every result is first flattened to a table of already formatted strings
(:func:`to_rows`). The CSV writer prints that table; the SVG writer parses
numbers back out of the same strings, so a plot regenerated from a CSV file
has exactly the same geometry.
"""
from __future__ import annotations

import csv
import io
from typing import IO, Optional, Sequence

import numpy as np

from .experiments import DeviceDemo, PerturbationTrace, RelearnResult, SequentialTrace, SweepResult
from .toy import ToyTrace
from .trainer import RunRecord


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".9g")


def to_rows(result) -> tuple:
    """Return ``(kind, header, rows)`` with every cell formatted as text."""
    if isinstance(result, SweepResult):
        header = ["n_in", "n_out", "n_bulk", "step", "success", "sem"]
        rows = []
        for p in result.points:
            curve = p.curve
            err = np.sqrt(curve * (1 - curve) / p.realizations)
            for s, (c, e) in enumerate(zip(curve, err), start=1):
                rows.append([p.n_in, p.n_out, p.n_bulk, s, c, e])
        kind = "sweep"
    elif isinstance(result, DeviceDemo):
        header = ["t", "v", "i", "r"]
        rows = [list(r) for r in zip(result.t, result.v, result.i, result.r)]
        kind = "device"
    elif isinstance(result, RelearnResult):
        header = ["maps_learned", "mean_r", "cv"]
        rows = [list(r) for r in zip(result.maps_learned, result.mean_r, result.cv)]
        kind = "relearn"
    elif isinstance(result, SequentialTrace):
        header = ["step", "map", "label", "error"]
        rows = [[s, m, result.labels[m], e]
                for s, (m, e) in enumerate(zip(result.map_index, result.errors), start=1)]
        kind = "sequential"
    elif isinstance(result, PerturbationTrace):
        marks = {e.step for e in result.events}
        header = ["step", "error", "perturbed_after"]
        rows = [[s, e, s in marks] for s, e in enumerate(result.errors, start=1)]
        kind = "perturb"
    elif isinstance(result, ToyTrace):
        header = ["step", "map", "error"]
        rows = [[s, m, e] for s, (m, e) in enumerate(zip(result.map_index, result.errors), start=1)]
        kind = "toy"
    elif isinstance(result, RunRecord):
        header = ["step", "input", "corrections", "resolved", "error"]
        rows = [[s.step, s.input, s.corrections, s.resolved, s.error] for s in result.steps]
        kind = "train"
    else:
        raise TypeError(f"no CSV schema for {type(result).__name__}")
    return kind, header, [[c if isinstance(c, str) else fmt(c) for c in row] for row in rows]


def histogram_rows(counts, edges) -> tuple:
    header = ["bin_low", "bin_high", "count"]
    rows = [[fmt(lo), fmt(hi), fmt(c)] for lo, hi, c in zip(edges[:-1], edges[1:], counts)]
    return "histogram", header, rows


def write_table(header: Sequence[str], rows, sink: IO[str]) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def emit_csv(result, sink: IO[str]) -> None:
    _, header, rows = to_rows(result)
    write_table(header, rows, sink)


def read_csv(text: str) -> tuple:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return header, [row for row in reader]


# --- SVG ---------------------------------------------------------------------

WIDTH, HEIGHT, MARGIN = 640, 400, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _series_for(kind: str, header: list, rows: list) -> tuple:
    """Pick the plotted series for a table: ``(series, xlabel, ylabel, connect)``."""
    col = {name: i for i, name in enumerate(header)}

    def grouped(key_cols, x, y):
        groups = {}
        for row in rows:
            key = " ".join(f"{k}={row[col[k]]}" for k in key_cols)
            groups.setdefault(key, ([], []))
            groups[key][0].append(float(row[col[x]]))
            groups[key][1].append(float(row[col[y]]))
        return [(k, xs, ys) for k, (xs, ys) in groups.items()]

    if kind == "sweep":
        return grouped(["n_in", "n_out", "n_bulk"], "step", "success"), "step", "success", True
    if kind == "device":
        return grouped([], "v", "i"), "V", "I", True
    if kind == "relearn":
        return grouped([], "maps_learned", "cv"), "maps learned", "CV", True
    if kind in ("sequential", "perturb", "toy", "train"):
        return grouped([], "step", "error"), "step", "error", True
    if kind == "histogram":
        series = [("", [float(r[0]) for r in rows] + [float(rows[-1][1])] if rows else [],
                   [float(r[2]) for r in rows] + [float(rows[-1][2])] if rows else [])]
        return series, "value", "count", True
    raise ValueError(f"unknown table kind {kind!r}")


def svg_from_rows(kind: str, header: list, rows: list, title: str = "") -> str:
    series, xlabel, ylabel, _ = _series_for(kind, header, rows)
    xs = [x for _, sx, _ in series for x in sx]
    ys = [y for _, _, sy in series for y in sy]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def px(x):
        return MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def py(y):
        return HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="12" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 12 {HEIGHT / 2})">{ylabel}</text>',
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 15}" font-size="10">{x0:.4g}</text>',
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 15}" font-size="10" text-anchor="end">{x1:.4g}</text>',
        f'<text x="{MARGIN - 4}" y="{HEIGHT - MARGIN}" font-size="10" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{MARGIN - 4}" y="{MARGIN + 4}" font-size="10" text-anchor="end">{y1:.4g}</text>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>')
    for n, (label, sx, sy) in enumerate(series):
        if not sx:
            continue
        color = COLORS[n % len(COLORS)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(sx, sy))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        if label:
            out.append(f'<text x="{WIDTH - MARGIN - 5}" y="{MARGIN + 14 * (n + 1)}" font-size="10" '
                       f'text-anchor="end" fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(result, sink: IO[str], title: str = "", table: Optional[tuple] = None) -> None:
    """Plot a result (or a pre-built ``(kind, header, rows)`` table) as SVG."""
    kind, header, rows = table if table is not None else to_rows(result)
    sink.write(svg_from_rows(kind, header, rows, title))
