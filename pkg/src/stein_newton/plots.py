"""Minimal dependency-free SVG scatter plots for 2-d ensembles."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, count)


def scatter_svg(points: np.ndarray, title: str = "", size: int = 400, margin: int = 40) -> str:
    """Axis-scaled scatter of the first two coordinates.

    Output is a pure function of the inputs (no timestamps or random ids), so
    plots are byte-identical across reruns.
    """
    P = np.asarray(points, dtype=float)[:, :2]
    lo = P.min(axis=0)
    hi = P.max(axis=0)
    pad = np.where(hi > lo, 0.05 * (hi - lo), 1.0)
    lo, hi = lo - pad, hi + pad
    inner = size - 2 * margin

    def sx(v):
        return margin + (v - lo[0]) / (hi[0] - lo[0]) * inner

    def sy(v):
        return size - margin - (v - lo[1]) / (hi[1] - lo[1]) * inner

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{inner}" height="{inner}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(lo[0], hi[0]):
        x = sx(t)
        out.append(f'<line x1="{x:.2f}" y1="{size - margin}" x2="{x:.2f}" y2="{size - margin + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{size - margin + 16}" font-size="10" text-anchor="middle">{t:.2f}</text>')
    for t in _ticks(lo[1], hi[1]):
        y = sy(t)
        out.append(f'<line x1="{margin - 4}" y1="{y:.2f}" x2="{margin}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{margin - 6}" y="{y + 3:.2f}" font-size="10" text-anchor="end">{t:.2f}</text>')
    for px, py in P:
        out.append(f'<circle cx="{sx(px):.2f}" cy="{sy(py):.2f}" r="1.5" fill="steelblue" fill-opacity="0.6"/>')
    if title:
        out.append(f'<text x="{size / 2}" y="{margin / 2}" font-size="12" text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
