"""Planar polygon helpers used by the Voronoi partition builder.

All coordinates are projected meters; every routine is pure numpy and
assumes convex polygons where noted (the clipping boundary is convex by
construction when the caller does not supply one).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "polygon_area",
    "point_in_polygon",
    "convex_hull",
    "buffered_hull",
    "clip_halfplane",
]


def polygon_area(vertices: np.ndarray) -> float:
    """Unsigned area of a simple polygon (shoelace formula), in m²."""
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def point_in_polygon(point, vertices: np.ndarray) -> bool:
    """Ray-casting point-in-polygon test; boundary points count as inside."""
    x, y = float(point[0]), float(point[1])
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    inside = False
    for i in range(n):
        x1, y1 = v[i]
        x2, y2 = v[(i + 1) % n]
        # on-edge check keeps the test closed
        if (min(x1, x2) - 1e-12 <= x <= max(x1, x2) + 1e-12
                and min(y1, y2) - 1e-12 <= y <= max(y1, y2) + 1e-12):
            cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
            if abs(cross) <= 1e-9 * max(1.0, abs(x2 - x1) + abs(y2 - y1)):
                return True
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x_cross > x:
                inside = not inside
    return inside


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull via Andrew's monotone chain, counter-clockwise vertices."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross2(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(seq):
        out: list[np.ndarray] = []
        for p in seq:
            while len(out) >= 2 and cross2(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def buffered_hull(points: np.ndarray, radius: float, arc_points: int = 32) -> np.ndarray:
    """Convex hull of the points dilated outward by `radius` meters.

    The disc is approximated by a regular `arc_points`-gon, so the result is
    a convex polygon suitable for half-plane clipping.
    """
    pts = np.asarray(points, dtype=float)
    if radius <= 0:
        return convex_hull(pts)
    theta = np.linspace(0.0, 2 * np.pi, arc_points, endpoint=False)
    disc = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    hull = convex_hull(pts)
    dilated = (hull[:, None, :] + disc[None, :, :]).reshape(-1, 2)
    return convex_hull(dilated)


def clip_halfplane(vertices: np.ndarray, a: float, b: float, c: float) -> np.ndarray:
    """Clip a convex polygon to the half-plane a*x + b*y <= c.

    Sutherland-Hodgman against a single edge; returns an empty array when
    nothing survives.
    """
    v = np.asarray(vertices, dtype=float)
    if len(v) == 0:
        return v
    out: list[tuple[float, float]] = []
    side = a * v[:, 0] + b * v[:, 1] - c
    n = len(v)
    for i in range(n):
        j = (i + 1) % n
        p, q = v[i], v[j]
        sp, sq = side[i], side[j]
        if sp <= 0:
            out.append((p[0], p[1]))
        if (sp <= 0) != (sq <= 0):
            t = sp / (sp - sq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return np.array(out) if out else np.empty((0, 2))
