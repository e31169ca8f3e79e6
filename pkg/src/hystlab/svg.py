"""Minimal deterministic SVG output: line charts and polygon maps.

Coordinates are printed with a fixed number of decimals and axis ranges are
rounded outward to two significant digits, so identical data give identical
bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

WIDTH = 640
PANEL_HEIGHT = 240
PAD_LEFT, PAD_RIGHT, PAD_TOP, PAD_BOTTOM = 70, 20, 28, 40
PALETTE = ("#1f4e79", "#b22222", "#2e7d32", "#6a1b9a", "#ef6c00", "#455a64")


def round2(x: float, up: bool) -> float:
    """Round to two significant digits, away from the data (``up`` rounds towards +inf)."""
    if x == 0 or not math.isfinite(x):
        return 0.0
    q = 10.0 ** (math.floor(math.log10(abs(x))) - 1)
    v = (math.ceil(x / q) if up else math.floor(x / q)) * q
    return float(f"{v:.2g}")


def nice_range(lo: float, hi: float) -> tuple[float, float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return 0.0, 1.0
    if hi <= lo:
        span = abs(lo) if lo != 0 else 1.0
        lo, hi = lo - 0.5 * span, hi + 0.5 * span
    return round2(lo, up=False), round2(hi, up=True)


def _f(v: float) -> str:
    return f"{v:.2f}"


def _header(width: int, height: int) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]


@dataclass
class Panel:
    title: str
    series: list[tuple[str, np.ndarray, np.ndarray]] = field(default_factory=list)
    xlabel: str = ""
    ylabel: str = ""
    step: bool = False

    def add(self, label: str, x, y) -> "Panel":
        self.series.append((label, np.asarray(x, dtype=float), np.asarray(y, dtype=float)))
        return self


def line_chart(panels: list[Panel], width: int = WIDTH, panel_height: int = PANEL_HEIGHT) -> str:
    """Stacked panels, one polyline per series, shared styling."""
    height = panel_height * len(panels)
    out = _header(width, height)
    for p_i, panel in enumerate(panels):
        top = p_i * panel_height
        xs = np.concatenate([s[1] for s in panel.series]) if panel.series else np.zeros(1)
        ys = np.concatenate([s[2] for s in panel.series]) if panel.series else np.zeros(1)
        ok = np.isfinite(xs) & np.isfinite(ys)
        x0, x1 = nice_range(float(xs[ok].min(initial=0.0)), float(xs[ok].max(initial=1.0)))
        y0, y1 = nice_range(float(ys[ok].min(initial=0.0)), float(ys[ok].max(initial=1.0)))
        L, R = PAD_LEFT, width - PAD_RIGHT
        T, B = top + PAD_TOP, top + panel_height - PAD_BOTTOM

        def px(v):
            return L + (v - x0) / (x1 - x0) * (R - L)

        def py(v):
            return B - (v - y0) / (y1 - y0) * (B - T)

        out.append(f'<rect x="{L}" y="{_f(T)}" width="{R - L}" height="{_f(B - T)}" '
                   'fill="none" stroke="#000000" stroke-width="1"/>')
        out.append(f'<text x="{L}" y="{_f(T - 8)}" font-family="sans-serif" font-size="13">'
                   f'{escape(panel.title)}</text>')
        for v, anchor, xx in ((x0, "start", L), (x1, "end", R)):
            out.append(f'<text x="{xx}" y="{_f(B + 16)}" text-anchor="{anchor}" font-family="sans-serif" '
                       f'font-size="11">{v:g}</text>')
        for v, yy in ((y0, B), (y1, T)):
            out.append(f'<text x="{L - 6}" y="{_f(yy + 4)}" text-anchor="end" font-family="sans-serif" '
                       f'font-size="11">{v:g}</text>')
        if panel.xlabel:
            out.append(f'<text x="{(L + R) // 2}" y="{_f(B + 30)}" text-anchor="middle" '
                       f'font-family="sans-serif" font-size="12">{escape(panel.xlabel)}</text>')
        if panel.ylabel:
            out.append(f'<text x="14" y="{_f((T + B) / 2)}" font-family="sans-serif" font-size="12" '
                       f'transform="rotate(-90 14 {_f((T + B) / 2)})" text-anchor="middle">'
                       f'{escape(panel.ylabel)}</text>')
        for s_i, (label, x, y) in enumerate(panel.series):
            color = PALETTE[s_i % len(PALETTE)]
            keep = np.isfinite(x) & np.isfinite(y)
            x, y = x[keep], y[keep]
            if panel.step and x.size > 1:
                x = np.repeat(x, 2)[1:]
                y = np.repeat(y, 2)[:-1]
            pts = " ".join(f"{_f(px(a))},{_f(py(b))}" for a, b in zip(x, y))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"/>')
            out.append(f'<text x="{R - 4}" y="{_f(T + 14 + 13 * s_i)}" text-anchor="end" fill="{color}" '
                       f'font-family="sans-serif" font-size="11">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def polygon_map(polygons: list[tuple[np.ndarray, str]], extent: float, size: int = 600,
                title: str = "") -> str:
    """Polygons in data coordinates inside the square ``[-extent, extent]^2``."""
    out = _header(size, size + 24)
    half = round2(max(extent, 1e-12), up=True)
    scale = (size - 20) / (2.0 * half)
    c = size / 2.0
    if title:
        out.append(f'<text x="10" y="16" font-family="sans-serif" font-size="13">{escape(title)}</text>')
    for pts, fill in polygons:
        pts = np.asarray(pts, dtype=float)
        s = " ".join(f"{_f(c + scale * x)},{_f(24 + c - scale * y)}" for x, y in pts)
        out.append(f'<polygon points="{s}" fill="{fill}" stroke="#ffffff" stroke-width="0.3"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
