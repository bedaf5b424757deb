"""SVG charts of trial metrics over simulated time, written by hand.

Each (scenario, variant) series is the average over its trials of the
per-trial step functions (a metric holds its last logged value until the next
sample and after the trial ends). Series start at the latest first-sample
time among the averaged trials so every trial contributes at every point.
"""

from __future__ import annotations

import math
from collections import defaultdict
from html import escape
from pathlib import Path

import numpy as np

from .acquisition import VARIANTS
from .engine import SCENARIOS

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf")
METRICS = (
    ("rmse", "RMSE (dBm)", lambda r: r.rmse),
    ("variance", "Mean variance (dBm²)", lambda r: r.mean_variance),
    ("distance", "Cumulative distance (m)", lambda r: r.cumulative_distance),
)
N_POINTS = 241
W, H = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 40, 50


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if not hi > lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    return [round(first + i * step, 10) for i in range(int((hi - first) / step + 1e-9) + 1)]


def step_series(logs, value, times) -> np.ndarray:
    """Mean over ``logs`` of each log's held value at ``times``."""
    acc = np.zeros(len(times))
    for lg in logs:
        t = np.array([r.time for r in lg.records])
        v = np.array([value(r) for r in lg.records])
        k = np.searchsorted(t, times, side="right") - 1
        acc += v[np.clip(k, 0, None)]
    return acc / len(logs)


def time_grid(logs, n: int = N_POINTS) -> np.ndarray:
    t0 = max(lg.records[0].time for lg in logs)
    t1 = max(lg.records[-1].time for lg in logs)
    return np.linspace(t0, t1, n) if t1 > t0 else np.array([t0])


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def line_chart(series: dict, title: str, xlabel: str, ylabel: str) -> str:
    """SVG text for ``{name: (x, y)}``; one polyline and one legend entry per name."""
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    ys = ys[np.isfinite(ys)]
    xt = nice_ticks(float(xs.min()), float(xs.max()))
    yt = nice_ticks(float(ys.min()) if ys.size else 0.0, float(ys.max()) if ys.size else 1.0)
    x0, x1 = min(xt[0], xs.min()), max(xt[-1], xs.max())
    y0, y1 = min(yt[0], ys.min() if ys.size else 0.0), max(yt[-1], ys.max() if ys.size else 1.0)
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
    sx = lambda x: LEFT + (x - x0) / ((x1 - x0) or 1) * pw  # noqa: E731
    sy = lambda y: TOP + ph - (y - y0) / ((y1 - y0) or 1) * ph  # noqa: E731

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
        'font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{LEFT + pw / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
    ]
    for t in xt:
        x = _fmt(sx(t))
        out.append(f'<line x1="{x}" y1="{TOP + ph}" x2="{x}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x}" y="{TOP + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in yt:
        y = _fmt(sy(t))
        out.append(f'<line x1="{LEFT - 4}" y1="{y}" x2="{LEFT + pw}" y2="{y}" stroke="#ddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y}" text-anchor="end" dominant-baseline="middle">{t:g}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(16 {TOP + ph / 2}) rotate(-90)" text-anchor="middle">{escape(ylabel)}</text>')

    legend = ['<g class="legend">']
    for i, (name, (x, y)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y) if math.isfinite(b))
        out.append(f'<polyline class="series" data-name="{escape(name)}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5" points="{pts}"/>')
        ly = TOP + 10 + 18 * i
        lx = W - RIGHT + 15
        legend.append(f'<g class="legend-entry"><line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" '
                      f'stroke="{color}" stroke-width="2"/><text x="{lx + 26}" y="{ly}" '
                      f'dominant-baseline="middle">{escape(name)}</text></g>')
    legend.append("</g>")
    out += legend
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _order(lg):
    known = list(VARIANTS)
    v = lg.variant
    scen = SCENARIOS.index(lg.scenario) if lg.scenario in SCENARIOS else len(SCENARIOS)
    return (scen, lg.scenario, known.index(v) if v in known else len(known), v,
            tuple(lg.source), lg.label.get("trial", 0), lg.seed)


def group_logs(logs) -> dict:
    """``{scenario: {variant: [logs]}}`` in a canonical order, skipping empty logs."""
    groups = defaultdict(dict)
    for lg in sorted(logs, key=_order):
        if lg.records:
            groups[lg.scenario].setdefault(lg.variant, []).append(lg)
    return groups


def emit_plots(logs, outdir, heatmaps: bool = False) -> list[Path]:
    """Three metric charts per scenario, plus optional map heatmaps."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for scen, by_variant in group_logs(logs).items():
        grids = {name: time_grid(lgs) for name, lgs in by_variant.items()}
        for key, label, value in METRICS:
            series = {name: (grids[name], step_series(lgs, value, grids[name])) for name, lgs in by_variant.items()}
            path = outdir / f"{scen}_{key}.svg"
            path.write_text(line_chart(series, f"{scen}: {label}", "Simulated time (s)", label))
            written.append(path)
        if heatmaps:
            for name, lgs in by_variant.items():
                path = outdir / f"{scen}_{name}_maps.svg"
                path.write_text(heatmap_triple(lgs[0]))
                written.append(path)
    return written


_RAMP = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]], float)


def _color(u: float) -> str:
    u = min(max(u, 0.0), 1.0) * (len(_RAMP) - 1)
    i = min(int(u), len(_RAMP) - 2)
    c = _RAMP[i] + (u - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#" + "".join(f"{int(round(v)):02x}" for v in c)


def heatmap_triple(log) -> str:
    """Ground truth, predicted mean and predicted variance side by side."""
    g = log.config["grid"]
    pitch = g["cell_pitch"]
    nx, ny = round(g["width"] / pitch), round(g["height"] / pitch)
    cell = 16
    pw, ph = nx * cell, ny * cell
    panels = (("Ground truth", log.truth), ("Predicted mean", log.final_mean), ("Predicted variance", log.final_variance))
    width = 3 * pw + 4 * 30
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{ph + 60}" '
           f'viewBox="0 0 {width} {ph + 60}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{ph + 60}" fill="white"/>']
    # truth and mean share a color scale so they can be compared by eye
    shared = np.concatenate([log.truth, log.final_mean])
    for p, (title, vals) in enumerate(panels):
        vals = np.asarray(vals, float)
        lo, hi = (shared.min(), shared.max()) if p < 2 else (vals.min(), vals.max())
        ox = 30 + p * (pw + 30)
        out.append(f'<text x="{ox + pw / 2}" y="18" text-anchor="middle">{title}</text>')
        out.append(f'<g class="panel" data-name="{title}">')
        for k, v in enumerate(vals):
            ix, iy = divmod(k, ny)
            u = (v - lo) / (hi - lo) if hi > lo else 0.5
            # y grows upward
            out.append(f'<rect x="{ox + ix * cell}" y="{30 + (ny - 1 - iy) * cell}" width="{cell}" '
                       f'height="{cell}" fill="{_color(u)}"/>')
        out.append("</g>")
        out.append(f'<text x="{ox}" y="{ph + 48}">{lo:.1f} .. {hi:.1f}</text>')
    sx, sy = log.source
    for p in range(2):
        ox = 30 + p * (pw + 30)
        out.append(f'<circle cx="{ox + (sx / pitch + 0.5) * cell}" cy="{30 + (ny - 0.5 - sy / pitch) * cell}" '
                   'r="4" fill="none" stroke="red" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
