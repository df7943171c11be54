"""Dependency-free deterministic SVG line plots.

Output is byte-identical for identical input: fixed styling, fixed color
cycle, no timestamps, stable float formatting.  Intended for the figure
bundles and batch scenarios, not for interactive work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


class PlotDataError(ValueError):
    """Non-finite or malformed series data; names the offending series."""


@dataclass(frozen=True)
class AxesSpec:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    xlog: bool = False


#: name, x values, y values
Series = tuple[str, Sequence[float], Sequence[float]]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#17becf", "#7f7f7f")

_W, _H = 860, 520
_ML, _MR, _MT, _MB = 72, 188, 42, 56


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    lo_d = math.floor(math.log10(lo))
    hi_d = math.ceil(math.log10(hi))
    stride = max(1, (hi_d - lo_d) // 10)
    ticks = [10.0 ** d for d in range(lo_d, hi_d + 1, stride)]
    return [t for t in ticks if lo <= t <= hi * (1 + 1e-12)]


def emit_svg_plot(series: Sequence[Series], axes: AxesSpec = AxesSpec()) -> str:
    """Render named (x, y) series to a standalone SVG document string."""
    if not series:
        raise PlotDataError("no series to plot")
    for name, xs, ys in series:
        if len(xs) != len(ys) or len(xs) == 0:
            raise PlotDataError(f"series {name!r}: x/y must be equal nonzero length")
        for v in xs:
            if not math.isfinite(v):
                raise PlotDataError(f"series {name!r}: non-finite x value")
        for v in ys:
            if not math.isfinite(v):
                raise PlotDataError(f"series {name!r}: non-finite y value")
        if axes.xlog and any(v <= 0 for v in xs):
            raise PlotDataError(f"series {name!r}: log x axis needs positive x")

    tx = (lambda v: math.log10(v)) if axes.xlog else (lambda v: v)
    x_lo = min(tx(v) for _, xs, _ in series for v in xs)
    x_hi = max(tx(v) for _, xs, _ in series for v in xs)
    y_lo = min(v for _, _, ys in series for v in ys)
    y_hi = max(v for _, _, ys in series for v in ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def px(v: float) -> float:
        return _ML + (tx(v) - x_lo) / (x_hi - x_lo) * pw

    def py(v: float) -> float:
        return _MT + (y_hi - v) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="Helvetica, Arial, sans-serif">',
        f'<rect width="{_W}" height="{_H}" fill="#ffffff"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333333" stroke-width="1"/>',
    ]

    if axes.xlog:
        xticks = _log_ticks(10.0 ** x_lo, 10.0 ** x_hi)
    else:
        xticks = _nice_ticks(x_lo, x_hi)
    for t in xticks:
        x = px(t)
        out.append(f'<line x1="{_fmt(x)}" y1="{_MT}" x2="{_fmt(x)}" y2="{_MT + ph}" '
                   f'stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<line x1="{_fmt(x)}" y1="{_MT + ph}" x2="{_fmt(x)}" y2="{_MT + ph + 5}" '
                   f'stroke="#333333" stroke-width="1"/>')
        out.append(f'<text x="{_fmt(x)}" y="{_MT + ph + 20}" font-size="12" '
                   f'text-anchor="middle" fill="#333333">{_fmt(t)}</text>')
    for t in _nice_ticks(y_lo, y_hi):
        y = py(t)
        out.append(f'<line x1="{_ML}" y1="{_fmt(y)}" x2="{_ML + pw}" y2="{_fmt(y)}" '
                   f'stroke="#dddddd" stroke-width="1"/>')
        out.append(f'<line x1="{_ML - 5}" y1="{_fmt(y)}" x2="{_ML}" y2="{_fmt(y)}" '
                   f'stroke="#333333" stroke-width="1"/>')
        out.append(f'<text x="{_ML - 8}" y="{_fmt(y + 4)}" font-size="12" '
                   f'text-anchor="end" fill="#333333">{_fmt(t)}</text>')

    for i, (name, xs, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')

    lx = _ML + pw + 14
    for i, (name, _, _) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        ly = _MT + 14 + 20 * i
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 28}" y="{ly + 4}" font-size="12" '
                   f'fill="#333333">{name}</text>')

    if axes.title:
        out.append(f'<text x="{_ML + pw / 2}" y="24" font-size="15" '
                   f'text-anchor="middle" fill="#111111">{axes.title}</text>')
    if axes.xlabel:
        out.append(f'<text x="{_ML + pw / 2}" y="{_H - 14}" font-size="13" '
                   f'text-anchor="middle" fill="#333333">{axes.xlabel}</text>')
    if axes.ylabel:
        out.append(f'<text x="20" y="{_MT + ph / 2}" font-size="13" text-anchor="middle" '
                   f'fill="#333333" transform="rotate(-90 20 {_MT + ph / 2})">{axes.ylabel}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
