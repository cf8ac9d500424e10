"""
Complex geometric structures of series groups.

Every member of a group is delay-embedded with the group's parameters (the
minimum dimension and lag over its members), projected onto three delay
coordinates, and the resulting cloud, pooled or per series, is measured
through its alpha shape.
"""

from __future__ import annotations

import itertools
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.embedding import DelayEmbedding, delay_embed, estimate_embedding, project_coords
from src.errors import CgsError, EstimationError, GeometryError
from src.geometry import (
    AlphaFiltration,
    AlphaShape,
    alpha_complex,
    alpha_sweep,
    convex_hull_volume,
    default_alpha_grid,
    delaunay3,
    optimal_alpha,
    shape_centroid,
    shape_surface_area,
)
from src.geometry.alpha_shape import DEFAULT_GRID_SIZE, DEFAULT_REL_TOL
from src.geometry.delaunay import Tetrahedralization
from src.ingest import SeriesGroup, TimeSeries
from src.models import CgsResult, GroupEmbeddingParams, MemberEstimate, VolumeCurve
from src.parallel import parallel_map

logger = logging.getLogger(__name__)

Coords = Tuple[int, int, int]
DEFAULT_COORDS: Coords = (0, 1, 2)


def _estimate_member(series: TimeSeries, kwargs: dict):
    try:
        return estimate_embedding(series, **kwargs)
    except CgsError as e:
        return e


def group_embedding_params(group: SeriesGroup, max_lag: int = 200, max_dim: int = 12,
                           fnn_threshold: float = 0.01, lag_method: str = "both",
                           rtol: float = 10.0, atol: float = 2.0, brute_force_limit: int = 5000,
                           lag: Optional[int] = None,
                           n_jobs: Optional[int] = None) -> GroupEmbeddingParams:
    """Per-member lag and dimension, reduced to the group minima. A fixed `lag` skips lag estimation."""
    kwargs = dict(max_lag=max_lag, max_dim=max_dim, fnn_threshold=fnn_threshold, rtol=rtol,
                  atol=atol, lag_method=lag_method, brute_force_limit=brute_force_limit, lag=lag)
    reports = parallel_map(lambda s: _estimate_member(s, kwargs), list(group.members), n_jobs)

    failures = {s.label: str(r) for s, r in zip(group.members, reports) if isinstance(r, Exception)}
    if failures:
        for label, message in failures.items():
            logger.error("%s/%s: %s", group.name, label, message)
        raise EstimationError(f"embedding estimation failed for {len(failures)} member(s) of {group.name}",
                              failures)

    per_member = [MemberEstimate(label=r.label, dim=r.dim, lag=r.lag) for r in reports]
    params = GroupEmbeddingParams(
        m=min(e.dim for e in per_member),
        lag=min(e.lag for e in per_member),
        per_member=per_member,
    )
    logger.info("Group %s: m=%d, lag=%d over %d members", group.name, params.m, params.lag, len(per_member))
    return params


def _check_coords(params: GroupEmbeddingParams, coords: Coords) -> Coords:
    if params.m < 3:
        raise GeometryError(f"embedding dimension m={params.m} < 3: no three-dimensional structure")
    coords = tuple(int(c) for c in coords)
    if len(set(coords)) != 3 or min(coords) < 0 or max(coords) >= params.m:
        raise GeometryError(f"coords {coords} must be 3 distinct indices below m={params.m}")
    return coords


def _embed_members(group: SeriesGroup, params: GroupEmbeddingParams) -> List[DelayEmbedding]:
    return [delay_embed(s, params.lag, params.m) for s in group.members]


def pooled_cloud(group: SeriesGroup, params: GroupEmbeddingParams,
                 coords: Coords = DEFAULT_COORDS) -> np.ndarray:
    """All members' projected delay vectors stacked in member order."""
    coords = _check_coords(params, coords)
    return np.vstack([project_coords(e, coords) for e in _embed_members(group, params)])


def _canonical(cloud: np.ndarray) -> Tuple[np.ndarray, int]:
    # sorted distinct rows, so pooling is independent of member order
    unique = np.unique(cloud, axis=0)
    return unique, cloud.shape[0] - unique.shape[0]


def _measure(tri: Tetrahedralization, alpha: float, merged: int, n_points: int,
             params: GroupEmbeddingParams, coords: Coords, source: str,
             group: Optional[str]) -> CgsResult:
    base = dict(alpha=alpha, m=params.m, lag=params.lag, coords=coords, n_points=n_points,
                source=source, group=group, duplicates_merged=merged)
    if tri.degenerate:
        return CgsResult(volume=0.0, surface_area=0.0, degenerate=True,
                         note="degenerate point cloud", **base)
    shape = alpha_complex(AlphaFiltration.build(tri), alpha)
    return CgsResult(
        volume=shape.volume,
        surface_area=shape_surface_area(shape),
        hull_volume=convex_hull_volume(tri),
        centroid=shape_centroid(shape),
        **base,
    )


def _pooled_tri(group: SeriesGroup, params: GroupEmbeddingParams,
                coords: Coords) -> Tuple[Tetrahedralization, int, int]:
    cloud = pooled_cloud(group, params, coords)
    unique, merged = _canonical(cloud)
    tri = delaunay3(unique)
    if tri.degenerate:
        raise GeometryError(f"pooled cloud of {group.name} is degenerate ({unique.shape[0]} distinct points)")
    return tri, merged, cloud.shape[0]


def cgs_pooled(group: SeriesGroup, alpha: float, coords: Coords = DEFAULT_COORDS,
               params: Optional[GroupEmbeddingParams] = None, **estimation) -> CgsResult:
    params = params or group_embedding_params(group, **estimation)
    coords = _check_coords(params, coords)
    tri, merged, n_points = _pooled_tri(group, params, coords)
    result = _measure(tri, alpha, merged, n_points, params, coords, "pooled", group.name)
    logger.info("Pooled CGS %s at alpha=%g: volume %.6g", group.name, alpha, result.volume)
    return result


def pooled_shape(group: SeriesGroup, alpha: float, coords: Coords = DEFAULT_COORDS,
                 params: Optional[GroupEmbeddingParams] = None, **estimation) -> AlphaShape:
    """Alpha shape of the pooled cloud, the one `cgs_pooled` measures."""
    params = params or group_embedding_params(group, **estimation)
    tri, _, _ = _pooled_tri(group, params, _check_coords(params, coords))
    return alpha_complex(tri, alpha)


def _series_result(series: TimeSeries, alpha: float, coords: Coords,
                   params: GroupEmbeddingParams, group: Optional[str]) -> CgsResult:
    try:
        points = project_coords(delay_embed(series, params.lag, params.m), coords)
    except EstimationError as e:
        return CgsResult(volume=0.0, surface_area=0.0, alpha=alpha, m=params.m, lag=params.lag,
                         coords=coords, n_points=0, source=series.label, group=group,
                         degenerate=True, note=str(e))
    unique, merged = _canonical(points)
    return _measure(delaunay3(unique), alpha, merged, points.shape[0], params, coords, series.label, group)


def cgs_per_series(group: SeriesGroup, alpha: float, coords: Coords = DEFAULT_COORDS,
                   params: Optional[GroupEmbeddingParams] = None, n_jobs: Optional[int] = None,
                   **estimation) -> List[CgsResult]:
    """One result per member, in member order; degenerate members are flagged with volume 0."""
    params = params or group_embedding_params(group, n_jobs=n_jobs, **estimation)
    coords = _check_coords(params, coords)
    results = parallel_map(lambda s: _series_result(s, alpha, coords, params, group.name),
                            list(group.members), n_jobs)
    flagged = sum(r.degenerate for r in results)
    if flagged:
        logger.warning("%d of %d members of %s are degenerate", flagged, len(results), group.name)
    return results


def group_volume_curve(group: SeriesGroup, params: GroupEmbeddingParams,
                       coords: Coords = DEFAULT_COORDS, grid: Optional[Sequence[float]] = None,
                       grid_size: int = DEFAULT_GRID_SIZE) -> VolumeCurve:
    """Alpha sweep of the pooled cloud over `grid` (default grid when omitted)."""
    coords = _check_coords(params, coords)
    unique, _ = _canonical(pooled_cloud(group, params, coords))
    tri = delaunay3(unique)
    if tri.degenerate:
        raise GeometryError(f"pooled cloud of {group.name} is degenerate")
    alphas = default_alpha_grid(tri, grid_size) if grid is None else grid
    return alpha_sweep(AlphaFiltration.build(tri), alphas)


def group_optimal_alphas(groups: Sequence[SeriesGroup], grid: Optional[Sequence[float]] = None,
                         grid_size: int = DEFAULT_GRID_SIZE, rel_tol: float = DEFAULT_REL_TOL,
                         coords: Coords = DEFAULT_COORDS,
                         params: Optional[Dict[str, GroupEmbeddingParams]] = None,
                         **estimation) -> Dict[str, float]:
    if not groups:
        raise ValueError("at least one group is required")
    params = params or {}
    optima = {}
    for group in groups:
        group_params = params.get(group.name) or group_embedding_params(group, **estimation)
        curve = group_volume_curve(group, group_params, coords, grid, grid_size)
        optima[group.name] = optimal_alpha(curve, rel_tol)
        logger.info("Group %s: optimal alpha %g", group.name, optima[group.name])
    return optima


def common_alpha(groups: Sequence[SeriesGroup], grid: Optional[Sequence[float]] = None,
                 **kwargs) -> float:
    """Largest of the per-group optimal alphas."""
    return max(group_optimal_alphas(groups, grid, **kwargs).values())


def coord_combination_volumes(group: SeriesGroup, alpha: float,
                              params: Optional[GroupEmbeddingParams] = None,
                              n_jobs: Optional[int] = None, **estimation) -> Dict[Coords, float]:
    """Pooled volume for every sorted triple of delay coordinates (C(m, 3) entries)."""
    params = params or group_embedding_params(group, n_jobs=n_jobs, **estimation)
    if params.m < 3:
        raise GeometryError(f"embedding dimension m={params.m} < 3: no coordinate triples")
    embeddings = _embed_members(group, params)
    triples = list(itertools.combinations(range(params.m), 3))

    def volume_of(triple: Coords) -> float:
        unique, _ = _canonical(np.vstack([project_coords(e, triple) for e in embeddings]))
        tri = delaunay3(unique)
        if tri.degenerate:
            logger.warning("%s: coordinates %s give a degenerate cloud", group.name, triple)
            return 0.0
        return alpha_complex(tri, alpha).volume

    volumes = parallel_map(volume_of, triples, n_jobs)
    return dict(zip(triples, volumes))


def usable_measures(results: Sequence[CgsResult], measure: str = "volume") -> Tuple[np.ndarray, int]:
    """Measures of non-degenerate results and the number excluded."""
    kept = [r.measure(measure) for r in results if not r.degenerate]
    return np.asarray(kept, dtype=np.float64), len(results) - len(kept)


def trim_results(results: Sequence[CgsResult], quantile: Optional[float] = None,
                 measure: str = "volume") -> List[CgsResult]:
    """Drop results whose measure exceeds the given upper quantile; no-op when quantile is None."""
    if quantile is None:
        return list(results)
    if not 0 < quantile <= 1:
        raise ValueError("trim quantile must lie in (0, 1]")
    values, _ = usable_measures(results, measure)
    if values.size == 0:
        return list(results)
    cutoff = float(np.quantile(values, quantile))
    kept = [r for r in results if r.degenerate or r.measure(measure) <= cutoff]
    logger.info("Trimmed %d results above the %.3g quantile (%.6g)", len(results) - len(kept), quantile, cutoff)
    return kept
