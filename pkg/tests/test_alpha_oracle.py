"""
Small-instance check of the alpha filtration against an exhaustive
construction: every 4-subset is tested for an empty circumsphere, and every
face gets its radius from the smallest ball through it, tested for emptiness
against all points.
"""

from itertools import combinations
from typing import Optional

import numpy as np
import pytest

from src.geometry import AlphaFiltration, alpha_complex, delaunay3


def smallest_ball(p: np.ndarray):
    if len(p) == 2:
        centre = 0.5 * (p[0] + p[1])
        return centre, float(np.linalg.norm(p[1] - p[0])) / 2
    a, b = p[1] - p[0], p[2] - p[0]
    n = np.cross(a, b)
    system = np.array([a, b, n])
    rhs = np.array([0.5 * a @ a, 0.5 * b @ b, 0.0])
    centre = p[0] + np.linalg.solve(system, rhs)
    return centre, float(np.linalg.norm(centre - p[0]))


def empty_of_others(pts: np.ndarray, members, centre, radius) -> bool:
    others = np.delete(pts, list(members), axis=0)
    return bool(np.all(np.linalg.norm(others - centre, axis=1) >= radius * (1 - 1e-12)))


def empty_circumsphere_tets(pts: np.ndarray, chunk: int = 20_000) -> dict:
    """Every non-flat 4-subset whose circumsphere holds no other point, batched."""
    quads = np.array(list(combinations(range(len(pts)), 4)))
    tets = {}
    for start in range(0, len(quads), chunk):
        q = quads[start:start + chunk]
        p = pts[q]
        a = p[:, 1:] - p[:, :1]
        solid = np.abs(np.linalg.det(a)) >= 1e-12
        q, p, a = q[solid], p[solid], a[solid]
        rhs = 0.5 * np.einsum("kij,kij->ki", a, a)
        centre = p[:, 0] + np.linalg.solve(a, rhs[..., None])[..., 0]
        radius = np.linalg.norm(centre - p[:, 0], axis=1)
        dist = np.linalg.norm(pts[None, :, :] - centre[:, None, :], axis=2)
        dist[np.arange(len(q))[:, None], q] = np.inf
        empty = np.all(dist >= radius[:, None] * (1 - 1e-12), axis=1)
        tets.update((tuple(int(v) for v in quad), float(r)) for quad, r in zip(q[empty], radius[empty]))
    return tets


def brute_force(pts: np.ndarray):
    tets = empty_circumsphere_tets(pts)

    def face_values(cofaces, k):
        values = {}
        for simplex, value in cofaces.items():
            for face in combinations(simplex, k):
                values[face] = min(values.get(face, np.inf), value)
        for face in values:
            centre, radius = smallest_ball(pts[list(face)])
            if empty_of_others(pts, face, centre, radius):
                values[face] = min(values[face], radius)
        return values

    triangles = face_values(tets, 3)
    edges = face_values(triangles, 2)
    return tets, triangles, edges


def as_dict(simplices: np.ndarray, values: np.ndarray):
    return {tuple(sorted(int(v) for v in s)): float(x) for s, x in zip(simplices, values)}


def kept_keys(simplices: np.ndarray, kept: np.ndarray) -> set:
    return {tuple(sorted(int(v) for v in s)) for s in simplices[kept]}


def assert_same_values(expected: dict, actual: dict) -> None:
    assert expected.keys() == actual.keys()
    for key, value in expected.items():
        assert actual[key] == pytest.approx(value, rel=1e-9)


def check_against_exhaustive(pts: np.ndarray, max_alphas: Optional[int] = None) -> None:
    tri = delaunay3(pts)
    filt = AlphaFiltration.build(tri)

    tets, triangles, edges = brute_force(tri.points)
    assert_same_values(tets, as_dict(tri.tetrahedra, filt.tet_values))
    assert_same_values(triangles, as_dict(tri.triangles, filt.triangle_values))
    assert_same_values(edges, as_dict(tri.edges, filt.edge_values))

    # classification at alphas between consecutive characteristic values
    values = np.unique(np.concatenate([filt.tet_values, filt.triangle_values, filt.edge_values]))
    values = values[np.concatenate([[True], np.diff(values) > 1e-9 * values[1:]])]
    midpoints = 0.5 * (values[1:] + values[:-1])
    if max_alphas is not None and midpoints.size > max_alphas:
        midpoints = midpoints[np.linspace(0, midpoints.size - 1, max_alphas).astype(int)]
    for alpha in midpoints:
        shape = alpha_complex(filt, alpha)
        for expected, simplices, kept in ((tets, tri.tetrahedra, shape.kept_tetrahedra),
                                          (triangles, tri.triangles, shape.kept_triangles),
                                          (edges, tri.edges, shape.kept_edges)):
            assert {key for key, v in expected.items() if v <= alpha} == kept_keys(simplices, kept)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(100))
def test_filtration_matches_exhaustive_construction(seed):
    rng = np.random.default_rng(seed)
    n = 60 if seed == 0 else int(rng.integers(5, 61))
    check_against_exhaustive(rng.uniform(-1.0, 1.0, size=(n, 3)), max_alphas=300)
