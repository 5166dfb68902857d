"""Minimal deterministic SVG line plots.

Hand-rolled on purpose: identical input must produce identical bytes, which
rules out plotting libraries that embed ids or timestamps.  Non-finite y
values (the -infinity deficiency entries) are rendered as markers clipped
to the bottom axis and counted in the return value.
"""

from __future__ import annotations

import math
from typing import Sequence

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def render_svg(
    series: Sequence[tuple[str, Sequence[tuple[float, float]]]],
    title: str = "",
    log_x: bool = False,
    width: int = 640,
    height: int = 420,
) -> tuple[str, int]:
    """Render labelled (x, y) series; returns (svg text, clipped count)."""
    if not series or all(len(pts) == 0 for _, pts in series):
        raise ValueError("empty series")

    def tx(x: float) -> float:
        return math.log(x) if log_x else x

    xs = [tx(x) for _, pts in series for x, _ in pts]
    finite_ys = [y for _, pts in series for _, y in pts if math.isfinite(y)]
    if not finite_ys:
        raise ValueError("no finite values to plot")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(finite_ys), max(finite_ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad_y = 0.05 * (y_hi - y_lo)
    y_lo -= pad_y
    y_hi += pad_y
    m_left, m_right, m_top, m_bot = 60, 20, 30, 45
    pw = width - m_left - m_right
    ph = height - m_top - m_bot

    def px(x: float) -> float:
        return m_left + pw * (tx(x) - x_lo) / (x_hi - x_lo)

    def py(y: float) -> float:
        return m_top + ph * (1.0 - (y - y_lo) / (y_hi - y_lo))

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    )
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title:
        out.append(
            f'<text x="{width // 2}" y="18" text-anchor="middle" '
            f'font-family="monospace" font-size="13">{title}</text>'
        )
    ax = (
        f'<path d="M {m_left} {m_top} L {m_left} {m_top + ph} '
        f'L {m_left + pw} {m_top + ph}" stroke="black" fill="none"/>'
    )
    out.append(ax)
    for t in _ticks(x_lo, x_hi):
        x = m_left + pw * (t - x_lo) / (x_hi - x_lo)
        label = _fmt(math.exp(t)) if log_x else _fmt(t)
        out.append(
            f'<line x1="{_fmt(x)}" y1="{m_top + ph}" x2="{_fmt(x)}" '
            f'y2="{m_top + ph + 4}" stroke="black"/>'
        )
        out.append(
            f'<text x="{_fmt(x)}" y="{m_top + ph + 18}" text-anchor="middle" '
            f'font-family="monospace" font-size="10">{label}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        y = py(t)
        out.append(
            f'<line x1="{m_left - 4}" y1="{_fmt(y)}" x2="{m_left}" '
            f'y2="{_fmt(y)}" stroke="black"/>'
        )
        out.append(
            f'<text x="{m_left - 8}" y="{_fmt(y + 3)}" text-anchor="end" '
            f'font-family="monospace" font-size="10">{_fmt(t)}</text>'
        )

    clipped = 0
    for i, (label, pts) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        finite_pts = [(x, y) for x, y in pts if math.isfinite(y)]
        if finite_pts:
            path = " ".join(
                f"{'M' if k == 0 else 'L'} {_fmt(px(x))} {_fmt(py(y))}"
                for k, (x, y) in enumerate(finite_pts)
            )
            out.append(f'<path d="{path}" stroke="{color}" fill="none" stroke-width="1.5"/>')
            for x, y in finite_pts:
                out.append(
                    f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="2.5" fill="{color}"/>'
                )
        for x, y in pts:
            if not math.isfinite(y):
                clipped += 1
                # Clipped marker: open triangle pinned to the bottom axis.
                cx, cy = px(x), m_top + ph
                out.append(
                    f'<path d="M {_fmt(cx - 4)} {_fmt(cy)} L {_fmt(cx + 4)} '
                    f'{_fmt(cy)} L {_fmt(cx)} {_fmt(cy - 7)} Z" fill="none" '
                    f'stroke="{color}" stroke-width="1.5"/>'
                )
        out.append(
            f'<text x="{m_left + pw - 6}" y="{m_top + 14 + 13 * i}" '
            f'text-anchor="end" font-family="monospace" font-size="11" '
            f'fill="{color}">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n", clipped
