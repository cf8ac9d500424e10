"""
Alpha complex of a Delaunay tetrahedralization and the measures taken on it.

Alpha is a length: the radius of the empty balls that carve the hull. Each
simplex gets one characteristic value at construction time
(`AlphaFiltration`), after which the complex at any alpha is a threshold.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict
from scipy.spatial.distance import pdist

from src.errors import GeometryError
from src.geometry.delaunay import Tetrahedralization
from src.models import VolumeCurve

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 64
DEFAULT_REL_TOL = 1e-3


def _triangle_circle(p0: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Circumcentres and circumradii of stacked triangles (inf when collinear)."""
    a, b = p1 - p0, p2 - p0
    n = np.cross(a, b)
    n2 = np.einsum("ij,ij->i", n, n)
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        offset = (aa[:, None] * np.cross(b, n) + bb[:, None] * np.cross(n, a)) / (2.0 * n2[:, None])
        radius = np.sqrt(aa * bb * np.einsum("ij,ij->i", a - b, a - b) / (4.0 * n2))
    radius[n2 == 0] = np.inf
    return p0 + offset, radius


def _tetra_radius(p: np.ndarray, orientation: np.ndarray, face_radius: np.ndarray) -> np.ndarray:
    b, c, d = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0], p[:, 3] - p[:, 0]
    det = np.einsum("ij,ij->i", b, np.cross(c, d))
    num = (np.einsum("ij,ij->i", b, b)[:, None] * np.cross(c, d)
           + np.einsum("ij,ij->i", c, c)[:, None] * np.cross(d, b)
           + np.einsum("ij,ij->i", d, d)[:, None] * np.cross(b, c))
    with np.errstate(divide="ignore", invalid="ignore"):
        radius = np.linalg.norm(num, axis=1) / (2.0 * np.abs(det))
    # flat tetrahedra: no circumsphere, enter with their largest face
    flat = (orientation == 0) | ~np.isfinite(radius)
    radius[flat] = face_radius[flat]
    return radius


class AlphaFiltration(BaseModel):
    """Characteristic alpha value of every tetrahedron, triangle and edge."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    tri: Tetrahedralization
    tet_values: np.ndarray
    triangle_values: np.ndarray
    edge_values: np.ndarray
    tet_volumes: np.ndarray

    @classmethod
    def build(cls, tri: Tetrahedralization) -> "AlphaFiltration":
        pts = tri.points
        tri_pts = pts[tri.triangles]
        centres, tri_radius = _triangle_circle(tri_pts[:, 0], tri_pts[:, 1], tri_pts[:, 2])

        tet_pts = pts[tri.tetrahedra]
        max_face = tri_radius[tri.tet_faces].max(axis=1) if tri.n_tetrahedra else np.empty(0)
        tet_values = _tetra_radius(tet_pts, tri.orientation, max_face) if tri.n_tetrahedra else np.empty(0)

        # a triangle is attached when a vertex across it lies inside its diametral sphere
        tri_values = tri_radius.copy()
        if tri.n_tetrahedra:
            across = pts[tri.tetrahedra]  # vertex k is across face k
            face = tri.tet_faces.ravel()
            d = across.reshape(-1, 3) - centres[face]
            with np.errstate(invalid="ignore"):
                inside = np.einsum("ij,ij->i", d, d) < tri_radius[face] ** 2
            inside |= ~np.isfinite(tri_radius[face])
            tri_values[face[inside]] = np.inf
            np.minimum.at(tri_values, face, np.repeat(tet_values, 4))

        edge_pts = pts[tri.edges]
        edge_values = 0.5 * np.linalg.norm(edge_pts[:, 1] - edge_pts[:, 0], axis=1)
        if len(tri.triangles):
            # third vertex of each incident triangle sees the edge at an obtuse angle
            thirds = tri.triangles[:, [2, 1, 0]].ravel()
            edge_of = tri.tri_edges.ravel()
            a, b = pts[tri.edges[edge_of, 0]], pts[tri.edges[edge_of, 1]]
            p = pts[thirds]
            attached = np.einsum("ij,ij->i", a - p, b - p) < 0
            edge_values[edge_of[attached]] = np.inf
            np.minimum.at(edge_values, edge_of, np.repeat(tri_values, 3))

        return cls(tri=tri, tet_values=tet_values, triangle_values=tri_values,
                   edge_values=edge_values, tet_volumes=tri.tetrahedron_volumes())

    def complex(self, alpha: float) -> "AlphaShape":
        return alpha_complex(self, alpha)

    def volume_at(self, alpha: float) -> float:
        return math.fsum(self.tet_volumes[self.tet_values <= alpha])

    @property
    def max_value(self) -> float:
        finite = [v.max() for v in (self.tet_values, self.triangle_values, self.edge_values) if v.size]
        return float(max(finite)) if finite else 0.0


class AlphaShape(BaseModel):
    """Kept simplices at one alpha; index arrays point into `tri`."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    alpha: float
    tri: Tetrahedralization
    kept_tetrahedra: np.ndarray
    kept_triangles: np.ndarray
    kept_edges: np.ndarray
    kept_vertices: np.ndarray
    boundary_triangles: np.ndarray
    boundary_owners: np.ndarray  # kept tetrahedron behind each boundary triangle
    volume: float

    @property
    def is_empty(self) -> bool:
        return self.kept_tetrahedra.size == 0


Source = Union[Tetrahedralization, AlphaFiltration]


def _filtration(source: Source) -> AlphaFiltration:
    return source if isinstance(source, AlphaFiltration) else AlphaFiltration.build(source)


def alpha_complex(source: Source, alpha: float) -> AlphaShape:
    """
    Simplices whose characteristic value is at most `alpha`. Vertices are
    always kept; alpha = inf keeps the whole tetrahedralization.
    """
    alpha = float(alpha)
    if math.isnan(alpha) or alpha < 0:
        raise GeometryError(f"alpha must be non-negative, got {alpha}")
    filt = _filtration(source)
    tri = filt.tri

    kept_tets = np.flatnonzero(filt.tet_values <= alpha)
    kept_tris = np.flatnonzero(filt.triangle_values <= alpha)
    kept_edges = np.flatnonzero(filt.edge_values <= alpha)

    # boundary: faces of exactly one kept tetrahedron; a kept flat tetrahedron
    # glues the two triangulations of its quadrilateral together
    faces = tri.tet_faces[kept_tets].ravel()
    counts = np.bincount(faces, minlength=len(tri.triangles))
    boundary = np.flatnonzero(counts == 1)
    owner_of = np.full(len(tri.triangles), -1, dtype=np.int64)
    owner_of[faces] = np.repeat(kept_tets, 4)
    return AlphaShape(
        alpha=alpha, tri=tri, kept_tetrahedra=kept_tets, kept_triangles=kept_tris,
        kept_edges=kept_edges, kept_vertices=np.arange(tri.n_points),
        boundary_triangles=boundary, boundary_owners=owner_of[boundary],
        volume=math.fsum(filt.tet_volumes[kept_tets]),
    )


def shape_volume(shape: AlphaShape) -> float:
    return shape.volume


def _triangle_areas(pts: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    p = pts[triangles]
    return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)


def shape_surface_area(shape: AlphaShape) -> float:
    if shape.boundary_triangles.size == 0:
        return 0.0
    tri = shape.tri
    return math.fsum(_triangle_areas(tri.points, tri.triangles[shape.boundary_triangles]))


def shape_centroid(shape: AlphaShape) -> Optional[Tuple[float, float, float]]:
    """Volume-weighted centre of the kept tetrahedra; None for an empty shape."""
    if shape.volume <= 0:
        return None
    tri = shape.tri
    vols = tri.tetrahedron_volumes()[shape.kept_tetrahedra]
    centres = tri.points[tri.tetrahedra[shape.kept_tetrahedra]].mean(axis=1)
    c = (vols[:, None] * centres).sum(axis=0) / vols.sum()
    return (float(c[0]), float(c[1]), float(c[2]))


def convex_hull_volume(tri: Tetrahedralization) -> float:
    if tri.n_tetrahedra == 0:
        return 0.0
    return math.fsum(tri.tetrahedron_volumes())


def default_alpha_grid(tri: Tetrahedralization, size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """
    `size` geometrically spaced radii from half the shortest Delaunay edge to
    the hull diameter, followed by inf.
    """
    if size < 1:
        raise ValueError("grid size must be positive")
    if tri.degenerate or len(tri.edges) == 0:
        return np.array([0.0, np.inf])
    e = tri.points[tri.edges]
    lo = 0.5 * float(np.min(np.linalg.norm(e[:, 1] - e[:, 0], axis=1)))
    hull_vertices = np.unique(tri.triangles[tri.hull_triangles()])
    hi = float(np.max(pdist(tri.points[hull_vertices])))
    grid = np.geomspace(lo, hi, size) if hi > lo else np.array([lo])
    return np.append(np.unique(grid), np.inf)


def alpha_sweep(source: Source, alpha_grid: Sequence[float], n_jobs: int = 1) -> VolumeCurve:
    grid = np.asarray(alpha_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise GeometryError("alpha grid must be a non-empty sequence")
    if np.any(np.isnan(grid)) or np.any(grid < 0):
        raise GeometryError("alpha grid values must be non-negative")
    if np.any(np.diff(grid) <= 0):
        raise GeometryError("alpha grid must be strictly increasing")

    filt = _filtration(source)
    if n_jobs == 1:
        volumes = [filt.volume_at(a) for a in grid]
    else:
        volumes = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(filt.volume_at)(a) for a in grid)
    hull = convex_hull_volume(filt.tri)
    logger.debug("Swept %d alphas, hull volume %.6g", grid.size, hull)
    return VolumeCurve(samples=[(float(a), float(v)) for a, v in zip(grid, volumes)], hull_volume=hull)


def optimal_alpha(curve: VolumeCurve, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """
    Smallest finite grid alpha whose volume reaches (1 - rel_tol) of the
    largest finite-alpha volume. The +inf sample only carries the hull; the
    slivers it adds on the boundary are not part of any plateau. A curve with
    no finite alpha returns inf.
    """
    if not 0 <= rel_tol < 1:
        raise ValueError("rel_tol must lie in [0, 1)")
    finite = [(a, v) for a, v in curve.samples if math.isfinite(a)]
    if not finite:
        return math.inf
    target = (1.0 - rel_tol) * max(v for _, v in finite)
    for alpha, volume in finite:
        if volume >= target:
            return alpha
    return finite[-1][0]
