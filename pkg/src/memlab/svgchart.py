"""Minimal static SVG charts: result displays, nothing interactive.

Output is plain XML with fixed number formatting so identical data renders
byte-identical files.
"""

from __future__ import annotations

from typing import Sequence

_PALETTE = ("#000000", "#9e9e9e", "#3465a4", "#cc0000")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _header(width: int, height: int, title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width / 2:.0f}" y="16" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{_escape(title)}</text>',
    ]


def _escape(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def line_chart(series: Sequence[tuple[str, Sequence[float]]], title: str,
               y_range: tuple[float, float] = (0.0, 1.0),
               width: int = 640, height: int = 320) -> str:
    """One polyline per named series, shared x index and y range."""
    left, right, top, bottom = 48, 12, 28, 28
    plot_w = width - left - right
    plot_h = height - top - bottom
    y_lo, y_hi = y_range
    span = (y_hi - y_lo) or 1.0
    n = max((len(vals) for _, vals in series), default=0)

    parts = _header(width, height, title)
    # axes drawn as one polyline so parsers see axes distinct from data
    parts.append(
        f'<polyline fill="none" stroke="#444444" stroke-width="1" points="'
        f'{_fmt(left)},{_fmt(top)} {_fmt(left)},{_fmt(top + plot_h)} '
        f'{_fmt(left + plot_w)},{_fmt(top + plot_h)}"/>'
    )
    parts.append(
        f'<text x="{left - 6}" y="{top + 4}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{_fmt(y_hi)}</text>'
    )
    parts.append(
        f'<text x="{left - 6}" y="{top + plot_h + 4}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{_fmt(y_lo)}</text>'
    )
    for k, (name, vals) in enumerate(series):
        if not len(vals):
            continue
        color = _PALETTE[k % len(_PALETTE)]
        pts = []
        denom = max(n - 1, 1)
        for i, v in enumerate(vals):
            x = left + plot_w * (i / denom)
            y = top + plot_h * (1.0 - (v - y_lo) / span)
            pts.append(f"{_fmt(x)},{_fmt(y)}")
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{" ".join(pts)}"/>'
        )
        parts.append(
            f'<text x="{left + 8 + 90 * k}" y="{height - 8}" fill="{color}" '
            f'font-family="sans-serif" font-size="10">{_escape(name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def range_bar_chart(values: Sequence[float], title: str,
                    width: int = 640, height: int = 240) -> str:
    """One rect per value, positive bars up from zero, negative bars down."""
    left, right, top, bottom = 48, 12, 28, 20
    plot_w = width - left - right
    plot_h = height - top - bottom
    vmax = max((abs(v) for v in values), default=0.0) or 1.0
    zero_y = top + plot_h / 2.0
    scale = (plot_h / 2.0) / vmax

    parts = _header(width, height, title)
    parts.append(
        f'<polyline fill="none" stroke="#444444" stroke-width="1" points="'
        f'{_fmt(left)},{_fmt(zero_y)} {_fmt(left + plot_w)},{_fmt(zero_y)}"/>'
    )
    parts.append(
        f'<text x="{left - 6}" y="{zero_y + 4:.0f}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">0</text>'
    )
    n = max(len(values), 1)
    bar_w = max(plot_w / n - 1.0, 0.5)
    for i, v in enumerate(values):
        x = left + plot_w * (i / n)
        h = abs(v) * scale
        y = zero_y - h if v > 0 else zero_y
        color = "#3465a4" if v > 0 else "#000000"
        parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(bar_w)}" '
            f'height="{_fmt(h)}" fill="{color}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
