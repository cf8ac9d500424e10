import math

import numpy as np
import pytest

from conftest import CUBE, UNIT_TETRA, ball_sample
from src.config.reference_values import PARABOLOID_REFERENCE
from src.dynsys import paraboloid_sample
from src.errors import GeometryError
from src.geometry import (
    AlphaFiltration,
    alpha_complex,
    alpha_sweep,
    check_delaunay,
    convex_hull_volume,
    default_alpha_grid,
    delaunay3,
    export_off,
    export_stl,
    optimal_alpha,
    shape_centroid,
    shape_surface_area,
    shape_volume,
)
from src.geometry.predicates import insphere, orient3d
from src.models import VolumeCurve


def rotation(seed: int) -> np.ndarray:
    q, r = np.linalg.qr(np.random.default_rng(seed).normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


# Predicates

def test_orient3d_signs():
    a, b, c, d = UNIT_TETRA
    assert orient3d(a, b, c, d) == 1
    assert orient3d(a, b, d, c) == -1
    assert orient3d(a, b, c, [0.3, 0.4, 0.0]) == 0
    assert orient3d(a, b, c, [0.3, 0.4, 1e-300]) == 1


def test_orient3d_is_vectorised():
    pts = np.repeat(UNIT_TETRA[None], 5, axis=0)
    pts[::2, [2, 3]] = pts[::2, [3, 2]]
    signs = orient3d(pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3])
    assert signs.tolist() == [-1, 1, -1, 1, -1]


def test_insphere_inside_outside_and_cospherical():
    a, b, c, d = UNIT_TETRA
    assert insphere(a, b, c, d, [0.5, 0.5, 0.5]) == 1
    assert insphere(a, b, c, d, [2.0, 2.0, 2.0]) == -1
    # both lie exactly on the circumsphere centred at (0.5, 0.5, 0.5)
    assert insphere(a, b, c, d, [1.0, 1.0, 0.0]) == 0
    assert insphere(a, b, c, d, [1.0, 1.0, 1.0]) == 0


# Delaunay

def test_unit_tetrahedron():
    tri = delaunay3(UNIT_TETRA)
    assert tri.n_tetrahedra == 1
    assert tri.orientation.tolist() == [1]
    assert len(tri.triangles) == 4
    assert len(tri.edges) == 6
    assert convex_hull_volume(tri) == pytest.approx(1 / 6, abs=1e-12)


def test_cube_corners_hull_volume():
    tri = delaunay3(CUBE)
    assert not tri.degenerate
    assert math.fsum(tri.tetrahedron_volumes()) == pytest.approx(1.0, abs=1e-12)


def test_duplicates_are_merged_in_first_occurrence_order():
    pts = np.vstack([UNIT_TETRA, UNIT_TETRA[[2, 0]]])
    tri = delaunay3(pts)
    assert tri.n_input == 6
    assert tri.duplicates_merged == 2
    assert np.array_equal(tri.points, UNIT_TETRA)
    assert tri.inverse.tolist() == [0, 1, 2, 3, 2, 0]


@pytest.mark.parametrize("pts", [
    np.zeros((0, 3)),
    UNIT_TETRA[:3],
    np.column_stack([np.arange(10.0), 2 * np.arange(10.0), np.zeros(10)]),
    np.column_stack([np.arange(10.0) % 3, np.arange(10.0) % 4, np.ones(10)]),
    np.repeat(UNIT_TETRA[:1], 7, axis=0),
])
def test_degenerate_inputs_give_empty_result(pts):
    tri = delaunay3(pts)
    assert tri.degenerate
    assert tri.n_tetrahedra == 0
    assert alpha_complex(tri, np.inf).volume == 0.0
    assert default_alpha_grid(tri).tolist() == [0.0, np.inf]


def test_invalid_point_arrays():
    with pytest.raises(GeometryError):
        delaunay3(np.zeros((5, 2)))
    with pytest.raises(GeometryError):
        delaunay3(np.array([[0.0, 0.0, np.nan]] * 5))


def test_tetrahedralization_is_read_only():
    tri = delaunay3(ball_sample(50, 1))
    with pytest.raises(ValueError):
        tri.points[0, 0] = 1.0


@pytest.mark.parametrize("seed", range(5))
def test_random_clouds_are_delaunay(seed):
    tri = delaunay3(ball_sample(300, seed))
    assert np.all(tri.orientation >= 0)
    assert check_delaunay(tri)


def test_paraboloid_sample_tetrahedralization():
    pts = paraboloid_sample(PARABOLOID_REFERENCE["n"], seed=0)
    tri = delaunay3(pts)
    assert not tri.degenerate
    assert check_delaunay(tri)
    hull = convex_hull_volume(tri)
    assert hull > 0
    filt = AlphaFiltration.build(tri)
    volumes = [filt.volume_at(a) for a in PARABOLOID_REFERENCE["alphas"]]
    assert volumes[0] == 0.0
    assert all(b >= a for a, b in zip(volumes, volumes[1:]))
    assert 0 < volumes[-1] <= hull
    assert filt.volume_at(np.inf) == pytest.approx(hull, rel=1e-12)


# Alpha complex measures

def test_unit_tetrahedron_measures():
    shape = alpha_complex(delaunay3(UNIT_TETRA), 10.0)
    assert shape_volume(shape) == pytest.approx(1 / 6, abs=1e-12)
    assert shape_surface_area(shape) == pytest.approx(1.5 + math.sqrt(3) / 2, abs=1e-12)
    assert shape_centroid(shape) == pytest.approx((0.25, 0.25, 0.25))


def test_cube_corners_measures():
    shape = alpha_complex(delaunay3(CUBE), np.inf)
    assert shape_volume(shape) == pytest.approx(1.0, abs=1e-12)
    assert shape_surface_area(shape) == pytest.approx(6.0, abs=1e-9)
    assert shape_centroid(shape) == pytest.approx((0.5, 0.5, 0.5))


def test_alpha_zero_keeps_only_vertices():
    tri = delaunay3(ball_sample(100, 3))
    shape = alpha_complex(tri, 0.0)
    assert shape.is_empty
    assert shape.volume == 0.0
    assert shape.kept_triangles.size == 0
    assert shape.kept_edges.size == 0
    assert shape.kept_vertices.size == tri.n_points
    assert shape_surface_area(shape) == 0.0
    assert shape_centroid(shape) is None


def test_alpha_infinity_is_the_hull():
    tri = delaunay3(ball_sample(400, 4))
    shape = alpha_complex(tri, np.inf)
    assert shape.kept_tetrahedra.size == tri.n_tetrahedra
    assert shape.volume == pytest.approx(convex_hull_volume(tri), rel=1e-12)
    assert np.array_equal(np.sort(shape.boundary_triangles), np.sort(tri.hull_triangles()))


@pytest.mark.parametrize("alpha", [-1.0, float("nan")])
def test_alpha_must_be_non_negative(alpha):
    with pytest.raises(GeometryError):
        alpha_complex(delaunay3(UNIT_TETRA), alpha)


def test_filtration_is_a_simplicial_complex():
    tri = delaunay3(ball_sample(300, 5))
    filt = AlphaFiltration.build(tri)
    # every face enters no later than its cofaces
    assert np.all(filt.triangle_values[tri.tet_faces] <= filt.tet_values[:, None])
    assert np.all(filt.edge_values[tri.tri_edges] <= filt.triangle_values[:, None])
    for alpha in np.quantile(filt.tet_values, [0.1, 0.5, 0.9]):
        shape = filt.complex(alpha)
        kept_faces = set(tri.tet_faces[shape.kept_tetrahedra].ravel().tolist())
        assert kept_faces <= set(shape.kept_triangles.tolist())


def test_scaling_volume_by_cube_of_factor():
    pts = ball_sample(300, 6)
    small = AlphaFiltration.build(delaunay3(pts))
    large = AlphaFiltration.build(delaunay3(2.0 * pts))
    alpha = float(np.median(small.tet_values))
    assert large.volume_at(2 * alpha) == pytest.approx(8 * small.volume_at(alpha), rel=1e-12)


def test_rigid_motion_invariance():
    pts = ball_sample(300, 7)
    moved = pts @ rotation(7).T + np.array([3.0, -1.0, 0.5])
    a = AlphaFiltration.build(delaunay3(pts))
    b = AlphaFiltration.build(delaunay3(moved))
    assert np.allclose(np.sort(a.tet_values), np.sort(b.tet_values), rtol=1e-9)
    assert convex_hull_volume(a.tri) == pytest.approx(convex_hull_volume(b.tri), rel=1e-9)


def check_sweep(pts) -> None:
    tri = delaunay3(pts)
    curve = alpha_sweep(tri, default_alpha_grid(tri))
    volumes = np.array(curve.volumes)
    assert np.all(np.diff(volumes) >= 0)
    assert np.all(volumes <= curve.hull_volume)
    assert volumes[-1] == curve.hull_volume


@pytest.mark.parametrize("seed", range(20))
def test_sweep_monotone_and_bounded(seed):
    rng = np.random.default_rng(seed)
    check_sweep(rng.normal(size=(int(rng.integers(50, 501)), 3)))


@pytest.mark.slow
def test_sweep_monotone_and_bounded_many_clouds():
    rng = np.random.default_rng(99)
    for _ in range(200):
        n = int(rng.integers(50, 501))
        check_sweep(rng.normal(size=(n, 3)) * rng.uniform(0.1, 10.0, size=3))


@pytest.mark.slow
def test_ball_sample_hull_volume_and_area():
    tri = delaunay3(ball_sample(20000, 8))
    shape = alpha_complex(tri, np.inf)
    assert shape.volume == pytest.approx(4 * math.pi / 3, rel=0.03)
    assert shape_surface_area(shape) == pytest.approx(4 * math.pi, rel=0.05)


# Sweeps and grids

def test_default_alpha_grid_shape():
    tri = delaunay3(ball_sample(200, 9))
    grid = default_alpha_grid(tri, 16)
    assert grid.size == 17
    assert grid[-1] == np.inf
    assert np.all(np.diff(grid) > 0)


@pytest.mark.parametrize("grid", [[], [0.5, 0.2], [-1.0, 1.0], [0.1, 0.1]])
def test_alpha_sweep_rejects_bad_grids(grid):
    with pytest.raises(GeometryError):
        alpha_sweep(delaunay3(UNIT_TETRA), grid)


def test_alpha_sweep_parallel_matches_serial():
    tri = delaunay3(ball_sample(300, 10))
    grid = default_alpha_grid(tri, 32)
    assert alpha_sweep(tri, grid, n_jobs=1) == alpha_sweep(tri, grid, n_jobs=2)


def test_optimal_alpha_first_alpha_of_plateau():
    curve = VolumeCurve(samples=[(0.1, 0.0), (0.2, 3.0), (0.4, 7.0), (0.8, 10.0), (1.6, 10.0)],
                        hull_volume=10.0)
    assert optimal_alpha(curve) == 0.8
    assert optimal_alpha(curve, rel_tol=0.35) == 0.4


def test_optimal_alpha_ignores_hull_sample():
    # boundary slivers only appear at alpha = inf
    curve = VolumeCurve(samples=[(1.0, 2.0), (2.0, 95.0), (4.0, 96.0), (np.inf, 100.0)], hull_volume=100.0)
    assert optimal_alpha(curve) == 4.0
    assert optimal_alpha(curve, rel_tol=0.02) == 2.0
    assert optimal_alpha(VolumeCurve(samples=[(np.inf, 1.0)], hull_volume=1.0)) == np.inf


# Mesh export

def test_stl_export_of_unit_tetrahedron(tmp_path):
    shape = alpha_complex(delaunay3(UNIT_TETRA), np.inf)
    path = export_stl(shape, tmp_path / "tetra.stl", name="tetra")
    text = path.read_text()
    assert text.startswith("solid tetra\n")
    assert text.rstrip().endswith("endsolid tetra")
    assert text.count("facet normal") == 4
    normals = [list(map(float, line.split()[2:])) for line in text.splitlines() if "facet normal" in line]
    # every normal points away from the centroid
    centre = UNIT_TETRA.mean(axis=0)
    facets = text.split("facet normal")[1:]
    for normal, facet in zip(normals, facets):
        vertex = [float(v) for v in facet.split("vertex")[1].split()[:3]]
        assert np.dot(normal, np.array(vertex) - centre) > 0


def test_off_export_of_cube(tmp_path):
    shape = alpha_complex(delaunay3(CUBE), np.inf)
    lines = export_off(shape, tmp_path / "cube.off").read_text().splitlines()
    assert lines[0] == "OFF"
    n_vertices, n_faces, _ = map(int, lines[1].split())
    assert n_vertices == 8
    assert n_faces == 12
    assert all(line.startswith("3 ") for line in lines[2 + n_vertices:])


def test_single_alpha_sweep_and_optimum():
    curve = alpha_sweep(delaunay3(UNIT_TETRA), [0.0])
    assert curve.samples == [(0.0, 0.0)]
    assert optimal_alpha(curve) == 0.0
