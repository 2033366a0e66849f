"""Dependency-free SVG scatter plots of pools and subsampled instances."""

from __future__ import annotations

from typing import Optional

from .core import Instance
from .subsample import BaseNodeDistribution

SIZE = 640
MARGIN = 20


def _sx(x: float) -> float:
    return MARGIN + x * (SIZE - 2 * MARGIN)


def _sy(y: float) -> float:
    # SVG y grows downward; flip so the unit square reads like a plot
    return SIZE - MARGIN - y * (SIZE - 2 * MARGIN)


def _circle(x: float, y: float, r: float, fill: str, cls: str) -> str:
    return f'<circle class="{cls}" cx="{_sx(x):.2f}" cy="{_sy(y):.2f}" r="{r}" fill="{fill}"/>'


def render_pool_svg(
    pool: Optional[BaseNodeDistribution] = None,
    instance: Optional[Instance] = None,
    title: str = "",
) -> str:
    """Scatter the pool (gray), overlay an instance (blue), highlight the depot (red)."""
    if pool is None and instance is None:
        raise ValueError("nothing to plot")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE - 2 * MARGIN}" '
        f'height="{SIZE - 2 * MARGIN}" fill="none" stroke="#ccc"/>',
    ]
    if title:
        parts.append(f'<text x="{MARGIN}" y="{MARGIN - 6}" font-size="12">{title}</text>')
    if pool is not None:
        for v in pool.nodes:
            parts.append(_circle(v.x, v.y, 1.5, "#9a9a9a", "pool"))
        if pool.depot is not None:
            parts.append(_circle(pool.depot.x, pool.depot.y, 6.0, "#d62728", "depot"))
    if instance is not None:
        for v in instance.customers:
            parts.append(_circle(v.x, v.y, 3.0, "#1f77b4", "sample"))
        if instance.depot is not None:
            parts.append(_circle(instance.depot.x, instance.depot.y, 6.0, "#d62728", "depot"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
