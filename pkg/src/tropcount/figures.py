"""Static SVG figures for rank-2 fans.

Hand-rolled SVG so the output is deterministic and dependency-free: shaded
wedges for the 2-dimensional cones, arrows for rays, a dot at the origin.
"""
from __future__ import annotations

import math

from .polyhedral import Fan

_PALETTE = ["#c6dbef", "#fdd0a2", "#c7e9c0", "#fcbba1", "#dadaeb", "#fee391"]


def _norm(v: tuple[int, int], scale: float) -> tuple[float, float]:
    length = math.hypot(v[0], v[1])
    return (scale * v[0] / length, -scale * v[1] / length)


def fan_svg(fan: Fan, size: int = 360, title: str = "") -> str:
    """Render a complete rank-2 fan; rays are drawn at unit length."""
    if fan.rank != 2:
        raise ValueError("SVG figures are drawn for rank-2 fans only")
    half = size / 2
    scale = 0.42 * size
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    two_cells = sorted(c for c in fan.cones if len(c) == 2)
    for k, cone in enumerate(two_cells):
        x1, y1 = _norm(fan.rays[cone[0]], scale * 1.25)
        x2, y2 = _norm(fan.rays[cone[1]], scale * 1.25)
        color = _PALETTE[k % len(_PALETTE)]
        lines.append(
            f'<path d="M {half:.1f} {half:.1f} L {half + x1:.1f} {half + y1:.1f} '
            f'L {half + x2:.1f} {half + y2:.1f} Z" fill="{color}" fill-opacity="0.55"/>'
        )
    for ray in sorted(fan.rays):
        x, y = _norm(ray, scale)
        lines.append(
            f'<line x1="{half:.1f}" y1="{half:.1f}" x2="{half + x:.1f}" y2="{half + y:.1f}" '
            'stroke="#333333" stroke-width="2"/>'
        )
        lx, ly = _norm(ray, scale * 1.12)
        lines.append(
            f'<text x="{half + lx:.1f}" y="{half + ly:.1f}" font-size="11" '
            f'text-anchor="middle" fill="#333333">({ray[0]},{ray[1]})</text>'
        )
    lines.append(f'<circle cx="{half:.1f}" cy="{half:.1f}" r="3" fill="#000000"/>')
    if title:
        lines.append(
            f'<text x="{half:.1f}" y="16" font-size="12" text-anchor="middle">{title}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
