"""Deterministic JSON, CSV and SVG writers for run artifacts."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np


def clean(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(clean(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj: Any) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path) -> Any:
    return json.loads(Path(path).read_text())


def write_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _cell(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    return "inf" if math.isinf(x) else format(x, ".17g")


def write_svg(path, series: dict[str, tuple[np.ndarray, np.ndarray]], xlabel: str, ylabel: str,
              logx: bool = False, logy: bool = False, width: int = 640, height: int = 400) -> None:
    """Minimal line plot: one polyline per named series, axes with min/max labels."""
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    tx = np.log10 if logx else (lambda v: v)
    ty = np.log10 if logy else (lambda v: v)
    pts = {}
    for name, (x, y) in series.items():
        x, y = np.asarray(x, float), np.asarray(y, float)
        ok = np.isfinite(x) & np.isfinite(y) & ((x > 0) if logx else True) & ((y > 0) if logy else True)
        pts[name] = (tx(x[ok]), ty(y[ok]))
    allx = np.concatenate([p[0] for p in pts.values()] or [np.zeros(1)])
    ally = np.concatenate([p[1] for p in pts.values()] or [np.zeros(1)])
    x0, x1 = (float(allx.min()), float(allx.max())) if len(allx) else (0.0, 1.0)
    y0, y1 = (float(ally.min()), float(ally.max())) if len(ally) else (0.0, 1.0)
    x1, y1 = (x1 if x1 > x0 else x0 + 1.0), (y1 if y1 > y0 else y0 + 1.0)
    m = 50

    def sx(v):
        return m + (v - x0) / (x1 - x0) * (width - 2 * m)

    def sy(v):
        return height - m - (v - y0) / (y1 - y0) * (height - 2 * m)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{m}" y1="{height - m}" x2="{width - m}" y2="{height - m}" stroke="black"/>',
           f'<line x1="{m}" y1="{m}" x2="{m}" y2="{height - m}" stroke="black"/>']
    fmt = (lambda v: f"{10 ** v:.3g}") if logx else (lambda v: f"{v:.3g}")
    fmty = (lambda v: f"{10 ** v:.3g}") if logy else (lambda v: f"{v:.3g}")
    out.append(f'<text x="{m}" y="{height - m + 16}" font-size="11">{fmt(x0)}</text>')
    out.append(f'<text x="{width - m}" y="{height - m + 16}" font-size="11" text-anchor="end">{fmt(x1)}</text>')
    out.append(f'<text x="{m - 4}" y="{height - m}" font-size="11" text-anchor="end">{fmty(y0)}</text>')
    out.append(f'<text x="{m - 4}" y="{m + 4}" font-size="11" text-anchor="end">{fmty(y1)}</text>')
    out.append(f'<text x="{width / 2}" y="{height - 12}" font-size="12" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{height / 2}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {height / 2})">{ylabel}</text>')
    for i, (name, (x, y)) in enumerate(pts.items()):
        c = colors[i % len(colors)]
        order = np.argsort(x, kind="stable")
        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[order], y[order]))
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{coords}"/>')
        out.append(f'<text x="{width - m}" y="{m + 14 * i}" font-size="11" fill="{c}" '
                   f'text-anchor="end">{name}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
