"""ASCII STL / OFF export of alpha-shape boundaries."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Tuple

import numpy as np

from src.geometry.alpha_shape import AlphaShape
from src.geometry.predicates import orient3d
from src.io_utils import atomic_write_text, format_float

logger = logging.getLogger(__name__)


def outward_triangles(shape: AlphaShape) -> np.ndarray:
    """Boundary triangles wound so their normals point away from the owning tetrahedron."""
    tri = shape.tri
    faces = tri.triangles[shape.boundary_triangles].copy()
    if faces.size == 0:
        return faces.reshape(0, 3)
    owners = tri.tetrahedra[shape.boundary_owners]
    # the owner's vertex that is not on the face
    on_face = (owners[:, :, None] == faces[:, None, :]).any(axis=2)
    inner = owners[~on_face]
    p = tri.points
    inward = orient3d(p[faces[:, 0]], p[faces[:, 1]], p[faces[:, 2]], p[inner]) > 0
    faces[inward] = faces[inward][:, [0, 2, 1]]
    return faces


def _fmt(values) -> str:
    return " ".join(format_float(float(v)) for v in values)


def _normals(pts: np.ndarray, faces: np.ndarray) -> np.ndarray:
    p = pts[faces]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    length = np.linalg.norm(n, axis=1, keepdims=True)
    return np.divide(n, length, out=np.zeros_like(n), where=length > 0)


def export_stl(shape: AlphaShape, path: str | Path, name: str = "cgs") -> Path:
    pts = shape.tri.points
    faces = outward_triangles(shape)
    lines = [f"solid {name}"]
    for face, normal in zip(faces, _normals(pts, faces)):
        lines.append(f"  facet normal {_fmt(normal)}")
        lines.append("    outer loop")
        lines.extend(f"      vertex {_fmt(pts[v])}" for v in face)
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {name}")
    logger.info("Writing %d boundary triangles to %s", len(faces), path)
    return atomic_write_text(path, "\n".join(lines) + "\n")


def _compact(shape: AlphaShape) -> Tuple[np.ndarray, np.ndarray]:
    faces = outward_triangles(shape)
    used, remapped = np.unique(faces, return_inverse=True)
    return shape.tri.points[used], np.asarray(remapped).reshape(faces.shape)


def export_off(shape: AlphaShape, path: str | Path) -> Path:
    vertices, faces = _compact(shape)
    lines = ["OFF", f"{len(vertices)} {len(faces)} 0"]
    lines.extend(_fmt(v) for v in vertices)
    lines.extend(f"3 {a} {b} {c}" for a, b, c in faces)
    return atomic_write_text(path, "\n".join(lines) + "\n")
