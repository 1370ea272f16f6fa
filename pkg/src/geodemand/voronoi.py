"""Voronoi partition of the plane around stations, clipped to a boundary.

Each cell is built directly as an intersection of bisector half-planes with
the (convex) clipping polygon, pruned by neighbor distance, so cells are
exact convex polygons and no infinite-region bookkeeping is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import buffered_hull, clip_halfplane, point_in_polygon, polygon_area
from .spatial import GeodemandError, SpatialIndex, nearest_join

AREA_CLOSURE_RTOL = 1e-3  # sum of cell areas vs boundary area


class DuplicateStationError(GeodemandError):
    def __init__(self, duplicates):
        self.duplicates = duplicates
        super().__init__(f"duplicate station coordinates at ids {duplicates}")


@dataclass
class VoronoiPartition:
    """Clipped Voronoi cells, one per station, areas in km²."""

    cells: list[np.ndarray]
    areas_km2: np.ndarray
    boundary: np.ndarray
    stations: np.ndarray
    boundary_is_default: bool = False
    metadata: dict = field(default_factory=dict)

    @property
    def boundary_area_km2(self) -> float:
        return polygon_area(self.boundary) / 1e6

    def membership(self, points) -> np.ndarray:
        """Cell id for each point, or -1 for points outside the boundary.

        A point belongs to the cell of its nearest station (ties -> lowest id),
        which is the defining property of the partition.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        idx = SpatialIndex(self.stations)
        owner = nearest_join(pts, idx)
        inside = np.array([point_in_polygon(p, self.boundary) for p in pts])
        return np.where(inside, owner, -1)


def default_boundary(stations: np.ndarray) -> np.ndarray:
    """Convex hull of the stations buffered outward by the 95th-percentile
    nearest-neighbor distance; used when the caller supplies no boundary."""
    idx = SpatialIndex(stations)
    nn = np.empty(len(stations))
    for i, p in enumerate(stations):
        ids, d = idx.knn(p, 2)
        nn[i] = d[ids != i][0] if np.any(ids != i) else 0.0
    radius = float(np.percentile(nn, 95))
    if radius <= 0:
        radius = 1.0
    return buffered_hull(stations, radius)


def build_voronoi(stations, boundary=None) -> VoronoiPartition:
    """Voronoi cells for the stations, clipped to `boundary` (convex polygon).

    Requires >= 3 distinct, non-collinear stations, all inside the boundary.
    Duplicate coordinates raise DuplicateStationError naming the offenders.
    """
    pts = np.atleast_2d(np.asarray(stations, dtype=float))
    n = len(pts)
    if n < 3:
        raise GeodemandError(f"need >= 3 stations, got {n}")

    _, uniq_inverse, counts = np.unique(
        pts, axis=0, return_inverse=True, return_counts=True
    )
    if np.any(counts > 1):
        dup_groups = np.flatnonzero(counts > 1)
        dups = [list(np.flatnonzero(uniq_inverse == g)) for g in dup_groups]
        raise DuplicateStationError(dups)

    centered = pts - pts.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-9 * max(1.0, np.abs(centered).max())) < 2:
        raise GeodemandError("stations are collinear; Voronoi cells are unbounded strips")

    boundary_is_default = boundary is None
    bpoly = default_boundary(pts) if boundary_is_default else np.asarray(boundary, dtype=float)
    if len(bpoly) < 3:
        raise GeodemandError("boundary polygon needs >= 3 vertices")
    for i, p in enumerate(pts):
        if not point_in_polygon(p, bpoly):
            raise GeodemandError(f"station {i} lies outside the clipping boundary")

    cells: list[np.ndarray] = []
    for i in range(n):
        p = pts[i]
        d = np.linalg.norm(pts - p, axis=1)
        order = np.argsort(d, kind="stable")
        cell = bpoly.copy()
        max_r = float(np.linalg.norm(cell - p, axis=1).max())
        for j in order:
            if j == i:
                continue
            if d[j] / 2.0 > max_r:
                break  # bisector cannot cut the current cell
            q = pts[j]
            a, b = q - p
            c = (np.dot(q, q) - np.dot(p, p)) / 2.0
            cell = clip_halfplane(cell, a, b, c)
            if len(cell) == 0:
                raise GeodemandError(f"station {i} produced an empty cell")
            max_r = float(np.linalg.norm(cell - p, axis=1).max())
        cells.append(cell)

    areas = np.array([polygon_area(c) for c in cells]) / 1e6
    part = VoronoiPartition(
        cells=cells,
        areas_km2=areas,
        boundary=bpoly,
        stations=pts,
        boundary_is_default=boundary_is_default,
        metadata={"boundary": "buffered-hull default" if boundary_is_default else "caller-supplied"},
    )
    total = part.boundary_area_km2
    if total > 0 and abs(areas.sum() - total) > AREA_CLOSURE_RTOL * total:
        raise GeodemandError(
            f"cell areas ({areas.sum():.6g} km²) do not close the boundary ({total:.6g} km²)"
        )
    return part
