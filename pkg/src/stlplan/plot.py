"""Static SVG rendering of a 2-D scenario and its paths."""

from __future__ import annotations

from typing import Mapping, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection

from .geometry import Polytope, Workspace

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"]


def polygon_vertices(poly: Polytope, ws: Workspace) -> np.ndarray:
    """Vertices (counter-clockwise) of ``poly`` clipped to the workspace."""
    lo, hi = np.asarray(ws.lo), np.asarray(ws.hi)
    H = np.vstack([poly.H, np.eye(2), -np.eye(2)])
    b = np.concatenate([poly.b, hi, -lo])
    centre = _interior(H, b)
    if centre is None:
        return np.zeros((0, 2))
    hs = HalfspaceIntersection(np.column_stack([H, -b]), centre)
    pts = np.unique(np.round(hs.intersections, 12), axis=0)
    ang = np.arctan2(pts[:, 1] - centre[1], pts[:, 0] - centre[0])
    return pts[np.argsort(ang)]


def _interior(H, b) -> Optional[np.ndarray]:
    # centre of the largest inscribed ball
    norms = np.linalg.norm(H, axis=1)
    c = np.array([0.0, 0.0, -1.0])
    res = linprog(c, A_ub=np.column_stack([H, norms]), b_ub=b, bounds=[(None, None)] * 2 + [(0, None)])
    if res.status != 0 or res.x[2] <= 1e-12:
        return None
    return res.x[:2]


def render_svg(ws: Workspace, regions: Mapping[str, Polytope], paths: Sequence = (),
               width: int = 600, title: str = "") -> str:
    """One ``<polygon>`` per region and one ``<polyline>`` per path."""
    if ws.dim != 2:
        raise ValueError("only 2-D scenarios can be plotted")
    lo, hi = np.asarray(ws.lo), np.asarray(ws.hi)
    scale = width / (hi[0] - lo[0])
    height = int(round((hi[1] - lo[1]) * scale))

    def xy(p):
        return f"{(p[0] - lo[0]) * scale:.2f},{(hi[1] - p[1]) * scale:.2f}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">']
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white" stroke="black"/>')
    for name, poly in regions.items():
        verts = polygon_vertices(poly, ws)
        pts = " ".join(xy(v) for v in verts)
        out.append(f'<polygon class="region" data-name="{escape(name)}" points="{pts}" '
                   f'fill="#cccccc" fill-opacity="0.6" stroke="#555555"/>')
        if len(verts):
            c = verts.mean(axis=0)
            out.append(f'<text x="{(c[0] - lo[0]) * scale:.2f}" y="{(hi[1] - c[1]) * scale:.2f}" '
                       f'font-size="12" text-anchor="middle">{escape(name)}</text>')
    for i, path in enumerate(paths):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(xy(p) for p in path.points)
        out.append(f'<polyline class="path" data-agent="{i + 1}" points="{pts}" fill="none" '
                   f'stroke="{color}" stroke-width="2"/>')
        for t, p in zip(path.times, path.points):
            x, y = xy(p).split(",")
            out.append(f'<circle cx="{x}" cy="{y}" r="3" fill="{color}"><title>t={t:.3f}</title></circle>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
