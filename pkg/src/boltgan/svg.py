"""Self-contained SVG line charts (no plotting dependency)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * step:
        out.append(round(t, 12))
        t += step
    return out


def _label(v: float) -> str:
    return f"{v:g}"


def line_chart(x, series: dict, title: str = "", x_label: str = "", width: int = 640, height: int = 400) -> str:
    """Render ``series`` (name -> y values aligned with ``x``) as SVG text.

    Non-finite points break the polyline rather than being drawn.
    """
    x = [float(v) for v in x]
    left, right, top, bottom = 60, 130, 36, 44
    pw, ph = width - left - right, height - top - bottom
    ys = [float(v) for vals in series.values() for v in vals if math.isfinite(float(v))]
    x_lo, x_hi = (min(x), max(x)) if x else (0.0, 1.0)
    y_lo, y_hi = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    def px(v):
        return left + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return top + (1.0 - (v - y_lo) / (y_hi - y_lo)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    for t in _ticks(x_lo, x_hi):
        parts.append(f'<line x1="{px(t):.2f}" y1="{top + ph}" x2="{px(t):.2f}" y2="{top + ph + 4}" stroke="#333"/>')
        parts.append(f'<text x="{px(t):.2f}" y="{top + ph + 16}" text-anchor="middle">{_label(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        parts.append(f'<line x1="{left - 4}" y1="{py(t):.2f}" x2="{left}" y2="{py(t):.2f}" stroke="#333"/>')
        parts.append(f'<line x1="{left}" y1="{py(t):.2f}" x2="{left + pw}" y2="{py(t):.2f}" stroke="#eee"/>')
        parts.append(f'<text x="{left - 7}" y="{py(t) + 4:.2f}" text-anchor="end">{_label(t)}</text>')
    if x_label:
        parts.append(f'<text x="{left + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{escape(x_label)}</text>')

    for k, (name, vals) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        runs, cur = [], []
        for xv, yv in zip(x, vals):
            yv = float(yv)
            if math.isfinite(yv):
                cur.append(f"{px(xv):.2f},{py(yv):.2f}")
            elif cur:
                runs.append(cur)
                cur = []
        if cur:
            runs.append(cur)
        for run in runs:
            parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{" ".join(run)}"/>')
        ly = top + 14 + 18 * k
        parts.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 32}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 37}" y="{ly + 4}">{escape(str(name))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_line_chart(path, x, series: dict, **kwargs) -> None:
    with open(path, "w") as fh:
        fh.write(line_chart(x, series, **kwargs))
