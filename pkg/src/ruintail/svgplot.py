"""Minimal dependency-free SVG line plots for ratio diagnostics.

Hand-rolled on purpose: outputs are meant for zero-dependency inspection in
a browser, and determinism (byte-identical files for identical inputs)
matters more than styling.
"""

from __future__ import annotations

import math
from typing import Sequence

__all__ = ["line_plot_svg"]

_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 20, 30, 50
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]


def _ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _log_ticks(lo: float, hi: float) -> list[float]:
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    return [10.0**e for e in range(int(lo_e), int(hi_e) + 1)
            if lo <= 10.0**e <= hi] or [lo, hi]


def line_plot_svg(x: Sequence[float], series: dict[str, Sequence[float]],
                  title: str, x_label: str = "x (log scale)",
                  y_label: str = "ratio") -> str:
    """Render one or more series against a log-x axis; returns SVG text."""
    xs = [float(v) for v in x]
    if not xs or any(v <= 0 for v in xs):
        raise ValueError("log-x plot needs positive x values")
    ys_all = [float(v) for vs in series.values() for v in vs if math.isfinite(v)]
    if not ys_all:
        raise ValueError("nothing to plot")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad
    lx_lo, lx_hi = math.log10(x_lo), math.log10(x_hi)
    if lx_hi == lx_lo:
        lx_hi = lx_lo + 1.0

    def px(v: float) -> float:
        return _ML + (math.log10(v) - lx_lo) / (lx_hi - lx_lo) * (_W - _ML - _MR)

    def py(v: float) -> float:
        return _H - _MB - (v - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W/2:.1f}" y="18" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">{title}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
        f'fill="none" stroke="#444"/>',
    ]
    for tx in _log_ticks(x_lo, x_hi):
        X = px(tx)
        parts.append(f'<line x1="{X:.2f}" y1="{_H-_MB}" x2="{X:.2f}" '
                     f'y2="{_H-_MB+5}" stroke="#444"/>')
        parts.append(f'<text x="{X:.2f}" y="{_H-_MB+18}" text-anchor="middle" '
                     f'font-size="11" font-family="sans-serif">{tx:g}</text>')
    for ty in _ticks(y_lo, y_hi):
        Y = py(ty)
        parts.append(f'<line x1="{_ML-5}" y1="{Y:.2f}" x2="{_ML}" y2="{Y:.2f}" '
                     f'stroke="#444"/>')
        parts.append(f'<text x="{_ML-8}" y="{Y+4:.2f}" text-anchor="end" '
                     f'font-size="11" font-family="sans-serif">{ty:.3g}</text>')
    parts.append(f'<text x="{_W/2:.1f}" y="{_H-10}" text-anchor="middle" '
                 f'font-size="12" font-family="sans-serif">{x_label}</text>')
    parts.append(f'<text x="16" y="{_H/2:.1f}" text-anchor="middle" font-size="12" '
                 f'font-family="sans-serif" transform="rotate(-90 16 {_H/2:.1f})">'
                 f'{y_label}</text>')
    for i, (name, vals) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(xv):.2f},{py(float(yv)):.2f}"
                       for xv, yv in zip(xs, vals) if math.isfinite(float(yv)))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        parts.append(f'<text x="{_W-_MR-6}" y="{_MT+16+14*i}" text-anchor="end" '
                     f'font-size="11" font-family="sans-serif" fill="{color}">'
                     f'{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
