"""Minimal deterministic SVG line/scatter plots for report bundles.

Hand-rolled on purpose: byte-identical output for identical data, no
timestamps or generated ids, no plotting dependency.
"""
from __future__ import annotations

import math
from typing import Sequence

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 60, 15, 15, 45


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * abs(step):
        out.append(round(t, 12))
        t += step
    return out


def line_plot(series: dict[str, tuple[Sequence[float], Sequence[float]]],
              xlabel: str, ylabel: str, title: str = "",
              scatter: bool = False) -> str:
    """Render named (x, y) series on shared axes; returns the SVG text."""
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = [y for _, ys in series.values() for y in ys
              if not (math.isnan(y) or math.isinf(y))]
    if not xs_all or not ys_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x: float) -> float:
        return _ML + (x - x0) / (x1 - x0) * (_W - _ML - _MR)

    def py(y: float) -> float:
        return _H - _MB - (y - y0) / (y1 - y0) * (_H - _MT - _MB)

    colors = ["#1f6fb4", "#d45500", "#2e8b57", "#8b2e8b", "#555555"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    for t in _ticks(x0, x1):
        X = _fmt(px(t))
        parts.append(f'<line x1="{X}" y1="{_MT}" x2="{X}" y2="{_H-_MB}" '
                     f'stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{X}" y="{_H-_MB+18}" font-size="11" '
                     f'text-anchor="middle" font-family="sans-serif">{t:g}</text>')
    for t in _ticks(y0, y1):
        Y = _fmt(py(t))
        parts.append(f'<line x1="{_ML}" y1="{Y}" x2="{_W-_MR}" y2="{Y}" '
                     f'stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{_ML-6}" y="{Y}" font-size="11" text-anchor="end" '
                     f'dominant-baseline="middle" font-family="sans-serif">{t:g}</text>')
    parts.append(f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" '
                 f'height="{_H-_MT-_MB}" fill="none" stroke="#333333"/>')
    for i, (name, (xs, ys)) in enumerate(sorted(series.items())):
        color = colors[i % len(colors)]
        pts = [(px(x), py(y)) for x, y in zip(xs, ys)
               if not (math.isnan(y) or math.isinf(y))]
        if scatter:
            for X, Y in pts:
                parts.append(f'<circle cx="{_fmt(X)}" cy="{_fmt(Y)}" r="2.5" '
                             f'fill="{color}"/>')
        else:
            path = " ".join(f"{_fmt(X)},{_fmt(Y)}" for X, Y in pts)
            parts.append(f'<polyline points="{path}" fill="none" '
                         f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{_W-_MR-8}" y="{_MT+16+14*i}" font-size="12" '
                     f'text-anchor="end" fill="{color}" '
                     f'font-family="sans-serif">{name}</text>')
    parts.append(f'<text x="{(_ML+_W-_MR)//2}" y="{_H-10}" font-size="12" '
                 f'text-anchor="middle" font-family="sans-serif">{xlabel}</text>')
    parts.append(f'<text x="14" y="{(_MT+_H-_MB)//2}" font-size="12" '
                 f'text-anchor="middle" font-family="sans-serif" '
                 f'transform="rotate(-90 14 {(_MT+_H-_MB)//2})">{ylabel}</text>')
    if title:
        parts.append(f'<text x="{(_ML+_W-_MR)//2}" y="{_MT+2}" font-size="13" '
                     f'text-anchor="middle" font-family="sans-serif">{title}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
