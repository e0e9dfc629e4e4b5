"""Static SVG scatter plots of confidence tables and difference series.

The SVG is written by hand so that the same CSV input always produces the
same bytes: no timestamps, no hashed element ids, no library version drift.
Color coding follows the experiment convention: blue/green/red for the
full/upper/lower models and black for the unmodified baseline.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from .confidence_analysis import ConfidenceSeries

MODEL_COLORS = {
    "full": "#1f5fbf",
    "upper": "#2e8b2e",
    "lower": "#c23b3b",
    "baseline": "#000000",
}
_FALLBACK_COLORS = ("#7b3fbf", "#bf7b3f", "#3fbfb7", "#bf3f98")

WIDTH, HEIGHT = 900, 420
MARGIN_LEFT, MARGIN_RIGHT = 60, 20
MARGIN_TOP, MARGIN_BOTTOM = 30, 45


def _color_for(tag: str, index: int) -> str:
    return MODEL_COLORS.get(tag, _FALLBACK_COLORS[index % len(_FALLBACK_COLORS)])


def _x(i: int, n: int) -> float:
    span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    if n <= 1:
        return MARGIN_LEFT + span / 2
    return MARGIN_LEFT + span * i / (n - 1)


def _y(value: float, lo: float, hi: float) -> float:
    span = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    frac = (value - lo) / (hi - lo) if hi > lo else 0.5
    return MARGIN_TOP + span * (1.0 - frac)


def _header(title: str, y_label: str, lo: float, hi: float,
            n_points: int) -> List[str]:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    # axes
    x0, x1 = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    y0, y1 = HEIGHT - MARGIN_BOTTOM, MARGIN_TOP
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" '
                 'stroke="black" stroke-width="1"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" '
                 'stroke="black" stroke-width="1"/>')
    for tick in range(5):
        value = lo + (hi - lo) * tick / 4
        ty = _y(value, lo, hi)
        parts.append(f'<line x1="{x0 - 4}" y1="{ty:.1f}" x2="{x0}" '
                     f'y2="{ty:.1f}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{x0 - 8}" y="{ty + 4:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{value:.2f}</text>')
    parts.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 10}" '
                 'text-anchor="middle" font-family="sans-serif" '
                 f'font-size="12">frame index ({n_points} frames)</text>')
    parts.append(f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
                 'font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{y_label}</text>')
    return parts


def _legend(tags: Sequence[str]) -> List[str]:
    parts = []
    x = MARGIN_LEFT + 10
    for i, tag in enumerate(tags):
        color = _color_for(tag, i)
        y = MARGIN_TOP + 14 + 16 * i
        parts.append(f'<circle cx="{x}" cy="{y}" r="4" fill="{color}"/>')
        parts.append(f'<text x="{x + 10}" y="{y + 4}" '
                     f'font-family="sans-serif" font-size="11">{tag}</text>')
    return parts


def sorted_confidence_svg(series: ConfidenceSeries, path: Union[str, Path],
                          title: str = "Per-frame confidence") -> None:
    """Scatter of every model row over the (already sorted) frame order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(series.frames)
    tags = sorted(series.values)
    parts = _header(title, "confidence", 0.0, 1.0, n)
    parts += _legend(tags)
    for i, tag in enumerate(tags):
        color = _color_for(tag, i)
        for j, v in enumerate(series.values[tag]):
            parts.append(f'<circle cx="{_x(j, n):.1f}" '
                         f'cy="{_y(v, 0.0, 1.0):.1f}" r="2.2" '
                         f'fill="{color}" fill-opacity="0.75"/>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")


def difference_svg(decreases: Sequence[float], path: Union[str, Path],
                   lost_threshold: float = 0.5,
                   title: str = "Confidence difference vs baseline") -> None:
    """Per-frame baseline-minus-variant scatter.

    Negative differences (variant beat the baseline) are drawn red, the
    rest black; the lost threshold is a dashed guide line.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(decreases)
    lo, hi = -1.0, 1.0
    parts = _header(title, "confidence decrease", lo, hi, n)
    zero_y = _y(0.0, lo, hi)
    parts.append(f'<line x1="{MARGIN_LEFT}" y1="{zero_y:.1f}" '
                 f'x2="{WIDTH - MARGIN_RIGHT}" y2="{zero_y:.1f}" '
                 'stroke="#999999" stroke-width="1"/>')
    thr_y = _y(lost_threshold, lo, hi)
    parts.append(f'<line x1="{MARGIN_LEFT}" y1="{thr_y:.1f}" '
                 f'x2="{WIDTH - MARGIN_RIGHT}" y2="{thr_y:.1f}" '
                 'stroke="#c23b3b" stroke-width="1" stroke-dasharray="5,4"/>')
    for j, d in enumerate(decreases):
        color = "#c23b3b" if d < 0 else "#000000"
        parts.append(f'<circle cx="{_x(j, n):.1f}" '
                     f'cy="{_y(d, lo, hi):.1f}" r="2.2" '
                     f'fill="{color}" fill-opacity="0.8"/>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")


__all__ = ["sorted_confidence_svg", "difference_svg", "MODEL_COLORS"]
