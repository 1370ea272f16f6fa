import numpy as np
import pytest

from geodemand.geometry import point_in_polygon, polygon_area
from geodemand.spatial import GeodemandError
from geodemand.voronoi import DuplicateStationError, build_voronoi


def square(cx, cy, half):
    return np.array([
        (cx - half, cy - half), (cx + half, cy - half),
        (cx + half, cy + half), (cx - half, cy + half),
    ])


class TestGridCase:
    def test_four_equal_unit_cells(self):
        # stations on a 1 km grid centered in a 2 km x 2 km boundary
        stations = np.array([(-500, -500), (500, -500), (-500, 500), (500, 500)], float)
        part = build_voronoi(stations, boundary=square(0, 0, 1000))
        assert part.areas_km2 == pytest.approx([1.0, 1.0, 1.0, 1.0], rel=1e-9)
        assert part.boundary_area_km2 == pytest.approx(4.0)

    def test_station_inside_own_cell(self):
        rng = np.random.default_rng(0)
        stations = rng.uniform(0, 10_000, size=(30, 2))
        part = build_voronoi(stations, boundary=square(5000, 5000, 6000))
        for p, cell in zip(stations, part.cells):
            assert point_in_polygon(p, cell)


class TestRasterOracle:
    def test_raster_points_fall_in_nearest_station_cell(self):
        rng = np.random.default_rng(42)
        stations = rng.uniform(0, 10_000, size=(50, 2))
        boundary = square(5000, 5000, 5200)
        part = build_voronoi(stations, boundary=boundary)
        xs = np.linspace(0, 10_000, 200)
        ys = np.linspace(0, 10_000, 200)
        sample = rng.choice(200 * 200, size=4000, replace=False)
        pts = np.column_stack([xs[sample % 200], ys[sample // 200]])
        d = np.linalg.norm(pts[:, None, :] - stations[None, :, :], axis=2)
        owner = d.argmin(axis=1)
        for p, o in zip(pts, owner):
            assert point_in_polygon(p, part.cells[o])


class TestInvariants:
    def test_area_closure(self):
        rng = np.random.default_rng(1)
        stations = rng.uniform(0, 50_000, size=(80, 2))
        boundary = square(25_000, 25_000, 26_000)
        part = build_voronoi(stations, boundary=boundary)
        assert part.areas_km2.sum() == pytest.approx(part.boundary_area_km2, rel=1e-3)

    def test_default_boundary_closure_and_flag(self):
        rng = np.random.default_rng(2)
        stations = rng.uniform(0, 20_000, size=(40, 2))
        part = build_voronoi(stations)
        assert part.boundary_is_default
        assert part.metadata["boundary"] == "buffered-hull default"
        assert part.areas_km2.sum() == pytest.approx(part.boundary_area_km2, rel=1e-3)

    def test_cells_disjoint_by_sampled_interior_points(self):
        rng = np.random.default_rng(3)
        stations = rng.uniform(0, 10_000, size=(25, 2))
        part = build_voronoi(stations, boundary=square(5000, 5000, 5500))
        # centroids of each cell must lie in exactly one cell
        for i, cell in enumerate(part.cells):
            centroid = cell.mean(axis=0)
            hits = [j for j, c in enumerate(part.cells) if point_in_polygon(centroid, c)]
            assert hits == [i]


class TestErrors:
    def test_duplicates_named(self):
        stations = np.array([(0, 0), (10, 0), (0, 10), (10, 0)], float)
        with pytest.raises(DuplicateStationError) as err:
            build_voronoi(stations, boundary=square(5, 5, 100))
        assert [1, 3] in err.value.duplicates

    def test_too_few_stations(self):
        with pytest.raises(GeodemandError):
            build_voronoi(np.array([(0, 0), (1, 1)], float))

    def test_collinear_stations(self):
        with pytest.raises(GeodemandError):
            build_voronoi(np.array([(0, 0), (1, 0), (2, 0), (3, 0)], float),
                          boundary=square(1.5, 0, 10))

    def test_station_outside_boundary(self):
        stations = np.array([(0, 0), (10, 0), (0, 10), (100, 100)], float)
        with pytest.raises(GeodemandError, match="outside"):
            build_voronoi(stations, boundary=square(5, 5, 20))


class TestGeometryHelpers:
    def test_polygon_area_unit_square(self):
        assert polygon_area(square(0, 0, 0.5)) == pytest.approx(1.0)

    def test_point_in_polygon_boundary_closed(self):
        sq = square(0, 0, 1)
        assert point_in_polygon((1.0, 0.0), sq)
        assert point_in_polygon((0.0, 0.0), sq)
        assert not point_in_polygon((1.5, 0.0), sq)
