from src.geometry.alpha_shape import (
    AlphaFiltration,
    AlphaShape,
    alpha_complex,
    alpha_sweep,
    convex_hull_volume,
    default_alpha_grid,
    optimal_alpha,
    shape_centroid,
    shape_surface_area,
    shape_volume,
)
from src.geometry.delaunay import Tetrahedralization, check_delaunay, delaunay3
from src.geometry.mesh_export import export_off, export_stl

__all__ = [
    "AlphaFiltration",
    "AlphaShape",
    "Tetrahedralization",
    "alpha_complex",
    "alpha_sweep",
    "check_delaunay",
    "convex_hull_volume",
    "default_alpha_grid",
    "delaunay3",
    "export_off",
    "export_stl",
    "optimal_alpha",
    "shape_centroid",
    "shape_surface_area",
    "shape_volume",
]
