"""Hand-rolled SVG line charts, free of plotting dependencies.

Output bytes depend only on the inputs: coordinates are formatted with
fixed precision and styling is static, so identical series produce
identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 72, 24, 36, 56
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


@dataclass(frozen=True)
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]


def _ticks_linear(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _ticks_log(lo: float, hi: float) -> list[float]:
    first = math.ceil(math.log10(lo) - 1e-9)
    last = math.floor(math.log10(hi) + 1e-9)
    ticks = [10.0**e for e in range(first, last + 1)]
    return ticks or [lo, hi]


def _fmt_tick(v: float, log: bool) -> str:
    if log:
        e = round(math.log10(v))
        return f"1e{e:d}" if abs(e) > 3 else f"{v:g}"
    return f"{v:.4g}"


def emit_plot(
    series: Sequence[Series],
    path: str,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    loglog: bool = False,
) -> None:
    """Write a standalone SVG line chart with one polyline per series."""
    if not series:
        raise ValueError("no series to plot")
    for s in series:
        if len(s.x) != len(s.y) or len(s.x) == 0:
            raise ValueError(f"series {s.label!r} is empty or ragged")
        if loglog and (min(s.x) <= 0 or min(s.y) <= 0):
            raise ValueError(f"series {s.label!r} has nonpositive values on log axes")

    tx = (lambda v: math.log10(v)) if loglog else (lambda v: v)
    xs = [tx(v) for s in series for v in s.x]
    ys = [tx(v) for s in series for v in s.y]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(v: float) -> float:
        return MARGIN_L + pw * (tx(v) - x_lo) / (x_hi - x_lo)

    def py(v: float) -> float:
        return MARGIN_T + ph * (1 - (tx(v) - y_lo) / (y_hi - y_lo))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
        f'fill="none" stroke="#333" stroke-width="1"/>',
    ]
    if title:
        out.append(
            f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{title}</text>'
        )

    if loglog:
        xticks = _ticks_log(10**x_lo, 10**x_hi)
        yticks = _ticks_log(10**y_lo, 10**y_hi)
    else:
        xticks = _ticks_linear(x_lo, x_hi)
        yticks = _ticks_linear(y_lo, y_hi)
    for v in xticks:
        x = px(v) if loglog else MARGIN_L + pw * (v - x_lo) / (x_hi - x_lo)
        if x < MARGIN_L - 0.5 or x > MARGIN_L + pw + 0.5:
            continue
        out.append(
            f'<line x1="{x:.2f}" y1="{MARGIN_T}" x2="{x:.2f}" y2="{MARGIN_T + ph}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{x:.2f}" y="{MARGIN_T + ph + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(v, loglog)}</text>'
        )
    for v in yticks:
        y = py(v) if loglog else MARGIN_T + ph * (1 - (v - y_lo) / (y_hi - y_lo))
        if y < MARGIN_T - 0.5 or y > MARGIN_T + ph + 0.5:
            continue
        out.append(
            f'<line x1="{MARGIN_L}" y1="{y:.2f}" x2="{MARGIN_L + pw}" y2="{y:.2f}" '
            f'stroke="#ddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{MARGIN_L - 6}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt_tick(v, loglog)}</text>'
        )
    if xlabel:
        out.append(
            f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 14}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{xlabel}</text>'
        )
    if ylabel:
        out.append(
            f'<text x="18" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" '
            f'transform="rotate(-90 18 {MARGIN_T + ph / 2:.1f})">{ylabel}</text>'
        )

    for si, s in enumerate(series):
        color = PALETTE[si % len(PALETTE)]
        pts = " ".join(f"{px(xv):.2f},{py(yv):.2f}" for xv, yv in zip(s.x, s.y))
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>'
        )
        ly = MARGIN_T + 16 + 16 * si
        out.append(
            f'<line x1="{MARGIN_L + pw - 130}" y1="{ly - 4}" x2="{MARGIN_L + pw - 104}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{MARGIN_L + pw - 98}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{s.label}</text>'
        )
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
