"""Deterministic SVG scatter rendering for point-set comparisons."""

from __future__ import annotations

from pathlib import Path

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
CANVAS = 800
MARGIN = 40
POINT_RADIUS = 1.6


def render_point_sets(
    point_sets: list[np.ndarray],
    labels: list[str],
    path: str | Path,
) -> None:
    """Overlay up to 4 point sets in one auto-fit SVG with a legend.

    Output is byte-deterministic for identical inputs.
    """
    if not point_sets:
        raise ValueError("need at least one point set")
    if len(point_sets) > len(PALETTE):
        raise ValueError(f"at most {len(PALETTE)} point sets supported")
    sets = [np.asarray(p, dtype=float).reshape(-1, 2) for p in point_sets]
    if any(p.shape[0] == 0 for p in sets):
        raise ValueError("point sets must be non-empty")
    if len(labels) != len(sets):
        raise ValueError("one label per point set required")

    allpts = np.vstack(sets)
    lo = allpts.min(axis=0)
    hi = allpts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
    scale = (CANVAS - 2 * MARGIN) / span

    def to_px(p):
        x = MARGIN + (p[:, 0] - lo[0]) * scale
        y = CANVAS - MARGIN - (p[:, 1] - lo[1]) * scale  # y up
        return x, y

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" '
        f'height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">',
        f'<rect width="{CANVAS}" height="{CANVAS}" fill="white"/>',
    ]
    for k, pts in enumerate(sets):
        xs, ys = to_px(pts)
        out.append(f'<g fill="{PALETTE[k]}" fill-opacity="0.7">')
        for x, y in zip(xs, ys):
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{POINT_RADIUS}"/>')
        out.append("</g>")
    for k, label in enumerate(labels):
        y = MARGIN + 18 * k
        out.append(
            f'<circle cx="{MARGIN}" cy="{y}" r="5" fill="{PALETTE[k]}"/>'
        )
        out.append(
            f'<text x="{MARGIN + 12}" y="{y + 4}" font-family="monospace" '
            f'font-size="13">{_escape(label)}</text>'
        )
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
