"""
CGS study pipeline.
Runs a whole group comparison, from series files to pooled and per-series
structures, reporting progress stage by stage.
"""

from __future__ import annotations

import logging
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

from src.cgs import cgs_per_series, cgs_pooled, group_embedding_params, group_optimal_alphas, trim_results
from src.config import Settings
from src.ingest import SeriesGroup, load_group
from src.models import CgsResult, GroupEmbeddingParams

logger = logging.getLogger(__name__)

StatusCallback = Optional[Callable[[Dict[str, Any]], None]]

PIPELINE_STAGES = [
    {"key": "ingest", "label": "Loading series groups"},
    {"key": "embedding", "label": "Estimating group embedding parameters"},
    {"key": "alpha", "label": "Selecting the common alpha"},
    {"key": "pooled", "label": "Building pooled structures"},
    {"key": "per_series", "label": "Building per-series structures"},
]


def run_cgs_study(
    groups: Sequence[Union[str, SeriesGroup]],
    alpha: Union[str, float] = "auto",
    settings: Optional[Settings] = None,
    mode: str = "both",
    coords=None,
    status_callback: StatusCallback = None,
    n_jobs: Optional[int] = None,
    params: Optional[Dict[str, GroupEmbeddingParams]] = None,
) -> Dict[str, Any]:
    """
    Full study over several groups.

    Args:
        groups: group directories or already loaded groups
        alpha: "auto" for the common alpha across groups, or a fixed radius
        settings: configuration; defaults come from config.yaml
        mode: "pooled", "per-series" or "both"
        status_callback: optional callable receiving a payload per stage event
        params: embedding parameters per group name; estimated when missing

    Returns:
        dict with keys params, optimal_alphas, alpha, pooled, per_series
    """
    settings = settings or Settings.from_yaml()
    coords = tuple(coords or settings.cgs.coords)
    n_jobs = n_jobs if n_jobs is not None else settings.n_jobs
    total_stages = len(PIPELINE_STAGES)

    def emit_stage(stage_index: int, status: str, message: Optional[str] = None) -> None:
        if status_callback is None:
            return
        stage = PIPELINE_STAGES[stage_index]
        if status == "started":
            progress = int(stage_index / total_stages * 100)
        else:
            progress = int((stage_index + 1) / total_stages * 100)
        payload = {
            "event": "status",
            "stage_index": stage_index,
            "stage_key": stage["key"],
            "label": stage["label"],
            "status": status,
            "progress": progress,
            "message": message or stage["label"],
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        try:
            status_callback(payload)
        except Exception:
            logger.exception("Status callback failed at stage %s", stage["key"])

    emit_stage(0, "started")
    loaded: List[SeriesGroup] = [
        g if isinstance(g, SeriesGroup) else load_group(g, settings.ingest.format, settings.ingest.fs)
        for g in groups
    ]
    emit_stage(0, "completed", f"Loaded {sum(len(g) for g in loaded)} series in {len(loaded)} groups")

    emit_stage(1, "started")
    params = dict(params or {})
    for group in loaded:
        if group.name not in params:
            params[group.name] = _group_params(group, settings, n_jobs)
    emit_stage(1, "completed", ", ".join(f"{k}: m={p.m} lag={p.lag}" for k, p in params.items()))

    emit_stage(2, "started")
    optima: Dict[str, float] = {}
    if alpha == "auto":
        optima = group_optimal_alphas(loaded, grid_size=settings.geometry.grid_size,
                                      rel_tol=settings.geometry.rel_tol, coords=coords, params=params)
        chosen = max(optima.values())
    else:
        chosen = float(alpha)
    emit_stage(2, "completed", f"alpha = {chosen:g}")

    pooled: List[CgsResult] = []
    per_series: List[CgsResult] = []

    emit_stage(3, "started")
    if mode in ("pooled", "both"):
        pooled = [cgs_pooled(g, chosen, coords, params=params[g.name]) for g in loaded]
    emit_stage(3, "completed", f"{len(pooled)} pooled structures")

    emit_stage(4, "started")
    if mode in ("per-series", "both"):
        for g in loaded:
            results = cgs_per_series(g, chosen, coords, params=params[g.name], n_jobs=n_jobs)
            per_series.extend(trim_results(results, settings.cgs.trim_quantile, settings.cgs.measure))
    emit_stage(4, "completed", f"{len(per_series)} per-series structures")

    logger.info("CGS study finished: %d groups, alpha=%g", len(loaded), chosen)
    return {
        "params": params,
        "optimal_alphas": optima,
        "alpha": chosen,
        "pooled": pooled,
        "per_series": per_series,
    }


def _group_params(group: SeriesGroup, settings: Settings, n_jobs: Optional[int]) -> GroupEmbeddingParams:
    emb = settings.embedding
    return group_embedding_params(
        group,
        max_lag=emb.max_lag,
        max_dim=emb.max_dim,
        fnn_threshold=emb.fnn_threshold,
        lag_method=emb.lag_method,
        rtol=emb.fnn_rtol,
        atol=emb.fnn_atol,
        brute_force_limit=emb.brute_force_limit,
        n_jobs=n_jobs,
    )
