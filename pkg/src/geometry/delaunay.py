"""
Delaunay tetrahedralization of 3-D point clouds (Qhull through scipy),
with duplicate merging, positive orientation and the face/edge topology the
alpha complex is built on.
"""

from __future__ import annotations

import logging
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.spatial import Delaunay, QhullError

from src.errors import GeometryError
from src.geometry.predicates import insphere, orient3d

logger = logging.getLogger(__name__)

# face k of a tetrahedron is the one opposite vertex k
FACE_VERTICES = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])
EDGE_VERTICES = np.array([[0, 1], [0, 2], [1, 2]])


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


class Tetrahedralization(BaseModel):
    """
    Immutable result of `delaunay3`. `points` are the distinct input points in
    first-occurrence order; `inverse[i]` maps input row i to its point.
    `tet_faces[t, k]` indexes the triangle opposite vertex k of tetrahedron t,
    `tri_edges[f]` the three edges of triangle f.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    points: np.ndarray
    inverse: np.ndarray
    tetrahedra: np.ndarray
    orientation: np.ndarray
    triangles: np.ndarray
    tet_faces: np.ndarray
    edges: np.ndarray
    tri_edges: np.ndarray
    n_input: int
    duplicates_merged: int
    degenerate: bool

    @field_validator("points", "inverse", "tetrahedra", "orientation", "triangles",
                     "tet_faces", "edges", "tri_edges")
    @classmethod
    def _freeze(cls, value: np.ndarray) -> np.ndarray:
        return _readonly(value)

    @property
    def n_points(self) -> int:
        return int(self.points.shape[0])

    @property
    def n_tetrahedra(self) -> int:
        return int(self.tetrahedra.shape[0])

    def tetrahedron_volumes(self) -> np.ndarray:
        p = self.points[self.tetrahedra]
        det = np.einsum("ij,ij->i", p[:, 1] - p[:, 0], np.cross(p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]))
        vol = np.abs(det) / 6.0
        vol[self.orientation == 0] = 0.0
        return vol

    def hull_triangles(self) -> np.ndarray:
        """Triangles that are faces of exactly one tetrahedron."""
        counts = np.bincount(self.tet_faces.ravel(), minlength=len(self.triangles))
        return np.flatnonzero(counts == 1)


def _dedupe(pts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    _, first, inverse = np.unique(pts, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return pts[first[order]], rank[np.asarray(inverse).reshape(-1)]


def _topology(tets: np.ndarray):
    n_tets = tets.shape[0]
    if n_tets == 0:
        empty3 = np.empty((0, 3), dtype=np.int64)
        return empty3, np.empty((0, 4), dtype=np.int64), np.empty((0, 2), dtype=np.int64), empty3
    faces = np.sort(tets[:, FACE_VERTICES].reshape(-1, 3), axis=1)
    triangles, face_inv = np.unique(faces, axis=0, return_inverse=True)
    edge_rows = triangles[:, EDGE_VERTICES].reshape(-1, 2)
    edges, edge_inv = np.unique(edge_rows, axis=0, return_inverse=True)
    return (triangles, np.asarray(face_inv).reshape(n_tets, 4),
            edges, np.asarray(edge_inv).reshape(-1, 3))


def _empty(pts: np.ndarray, inverse: np.ndarray, n_input: int) -> Tetrahedralization:
    tri, faces, edges, tri_edges = _topology(np.empty((0, 4), dtype=np.int64))
    return Tetrahedralization(
        points=pts, inverse=inverse, tetrahedra=np.empty((0, 4), dtype=np.int64),
        orientation=np.empty(0, dtype=np.int8), triangles=tri, tet_faces=faces,
        edges=edges, tri_edges=tri_edges, n_input=n_input,
        duplicates_merged=n_input - pts.shape[0], degenerate=True,
    )


def delaunay3(points) -> Tetrahedralization:
    """
    Tetrahedralize a point cloud. Duplicate points are merged first; inputs
    with fewer than four distinct points, or whose points are collinear or
    coplanar, give an empty result flagged `degenerate`.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise GeometryError(f"expected an (n, 3) array of points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("point coordinates must be finite")
    n_input = pts.shape[0]
    if n_input == 0:
        return _empty(pts.reshape(0, 3), np.empty(0, dtype=np.int64), 0)

    unique, inverse = _dedupe(pts)
    merged = n_input - unique.shape[0]
    if merged:
        logger.info("Merged %d duplicate points (%d distinct of %d)", merged, unique.shape[0], n_input)

    if unique.shape[0] < 4 or np.linalg.matrix_rank(unique - unique[0]) < 3:
        logger.warning("Point cloud is degenerate (%d distinct points, affine rank < 3)", unique.shape[0])
        return _empty(unique, inverse, n_input)

    try:
        qhull = Delaunay(unique, qhull_options="Qbb Qc Qz Q12")
    except QhullError as e:
        logger.warning("Qhull rejected the point cloud as degenerate: %s", str(e).splitlines()[0])
        return _empty(unique, inverse, n_input)

    tets = np.asarray(qhull.simplices, dtype=np.int64).copy()
    if len(qhull.coplanar):
        logger.debug("%d points left out of the tetrahedralization by Qhull", len(qhull.coplanar))

    p = unique[tets]
    signs = orient3d(p[:, 0], p[:, 1], p[:, 2], p[:, 3]).astype(np.int8)
    flip = signs < 0
    tets[flip] = tets[flip][:, [0, 1, 3, 2]]
    signs[flip] = 1
    if np.any(signs == 0):
        logger.debug("%d flat tetrahedra in the triangulation", int(np.count_nonzero(signs == 0)))

    triangles, tet_faces, edges, tri_edges = _topology(tets)
    return Tetrahedralization(
        points=unique, inverse=inverse, tetrahedra=tets, orientation=signs,
        triangles=triangles, tet_faces=tet_faces, edges=edges, tri_edges=tri_edges,
        n_input=n_input, duplicates_merged=merged, degenerate=False,
    )


def check_delaunay(tri: Tetrahedralization) -> bool:
    """
    Local Delaunay test on every interior triangle: the vertex across the
    triangle must not lie strictly inside the neighbour's circumsphere.
    Flat tetrahedra carry no sphere and are skipped.
    """
    if tri.n_tetrahedra == 0:
        return True
    flat_faces = tri.tet_faces.ravel()
    owner = np.repeat(np.arange(tri.n_tetrahedra), 4)
    corner = np.tile(np.arange(4), tri.n_tetrahedra)
    order = np.argsort(flat_faces, kind="stable")
    f, t, k = flat_faces[order], owner[order], corner[order]
    shared = np.flatnonzero(f[1:] == f[:-1])
    t1, k1 = t[shared], k[shared]
    t2, k2 = t[shared + 1], k[shared + 1]

    ok = (tri.orientation[t1] > 0) & (tri.orientation[t2] > 0)
    pts = tri.points
    ok_pairs = np.flatnonzero(ok)
    if ok_pairs.size == 0:
        return True
    sphere = pts[tri.tetrahedra[t1[ok_pairs]]]
    across = pts[tri.tetrahedra[t2[ok_pairs], k2[ok_pairs]]]
    inside = insphere(sphere[:, 0], sphere[:, 1], sphere[:, 2], sphere[:, 3], across) > 0

    sphere_b = pts[tri.tetrahedra[t2[ok_pairs]]]
    across_b = pts[tri.tetrahedra[t1[ok_pairs], k1[ok_pairs]]]
    inside |= insphere(sphere_b[:, 0], sphere_b[:, 1], sphere_b[:, 2], sphere_b[:, 3], across_b) > 0
    if np.any(inside):
        logger.error("%d interior faces violate the Delaunay property", int(np.count_nonzero(inside)))
        return False
    return True
