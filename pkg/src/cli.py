"""
Command-line entry point.

Every command resolves its options against config.yaml into a `RunConfig`,
hands it to `dispatch`, and exits with the code of the error class that
stopped it (0 when every artifact was written). Each run leaves
`<output>.manifest.json` next to its output; `rerun` replays one.
"""

from __future__ import annotations

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import typer
from pydantic import ValidationError
from rich.console import Console

from src import __version__
from src.ccf import cluster_matrix_rows, distance_matrix
from src.cgs import (
    coord_combination_volumes,
    group_embedding_params,
    group_optimal_alphas,
    group_volume_curve,
    pooled_shape,
)
from src.config import Settings
from src.dynsys import LorenzParams, lorenz_equilibria, lorenz_trajectory, paraboloid_sample, trajectory_to_frame
from src.embedding import estimate_embedding
from src.errors import EXIT_CODES, CgsError, ConfigError, EstimationError, StatsError
from src.geometry import export_off, export_stl, optimal_alpha
from src.ingest import SeriesGroup, load_group, load_series, summary_stats
from src.io_utils import describe_output, non_finite_as_text, write_frame_csv, write_json, write_records
from src.logging_config import configure_logging
from src.models import CgsResult, GroupEmbeddingParams, RunConfig, RunManifest
from src.pipeline import run_cgs_study
from src.stats import (
    kde,
    kl_divergence,
    kruskal_wallis,
    pairwise_intrinsic_discrepancy,
    pairwise_wilcoxon_bonferroni,
    wilcoxon_rank_sum,
)

logger = logging.getLogger(__name__)
console = Console(stderr=True)

app = typer.Typer(
    help="Complex geometric structures of time-series groups.",
    no_args_is_help=True,
    add_completion=False,
)

Outputs = Tuple[List[Path], Dict[str, Any]]


# Config resolution

def settings_defaults(settings: Settings, command: str) -> Dict[str, Any]:
    """RunConfig values taken from config.yaml when no flag overrides them."""
    defaults = {
        "input_format": settings.ingest.format,
        "fs": settings.ingest.fs,
        "alpha_grid_size": settings.geometry.grid_size,
        "rel_tol": settings.geometry.rel_tol,
        "max_dim": settings.embedding.max_dim,
        "fnn_threshold": settings.embedding.fnn_threshold,
        "fnn_rtol": settings.embedding.fnn_rtol,
        "fnn_atol": settings.embedding.fnn_atol,
        "lag_method": settings.embedding.lag_method,
        "coords": tuple(settings.cgs.coords),
        "measure": settings.cgs.measure,
        "trim_quantile": settings.cgs.trim_quantile,
        "variant": settings.ccf.variant,
        "positive_only": settings.ccf.positive_only,
        "output_format": settings.output.format,
    }
    if command != "ccf-matrix":
        defaults["max_lag"] = settings.embedding.max_lag
    if command in ("cgs", "combos"):
        defaults["alpha"] = "auto"
    if command == "gen-lorenz":
        d = settings.dynsys
        defaults.update(dt=d.dt, t_end=d.t_end, transient=d.transient, s=d.s, r=d.r, b=d.b)
    if command == "gen-paraboloid":
        defaults["n"] = 2500
    return defaults


def build_config(command: str, settings: Settings, **options: Any) -> RunConfig:
    values = settings_defaults(settings, command)
    for key, value in options.items():
        if value is None:
            continue
        if key == "coords" and isinstance(value, str):
            value = parse_coords(value)
        elif isinstance(value, Path):
            value = str(value)
        elif isinstance(value, list):
            value = [str(v) for v in value]
        values[key] = value
    return RunConfig(command=command, **values)


def parse_coords(text: Optional[str]) -> Optional[Tuple[int, int, int]]:
    if text is None:
        return None
    try:
        parts = tuple(int(p) for p in text.split(","))
    except ValueError as e:
        raise ConfigError(f"--coords expects three comma-separated integers, got {text!r}") from e
    if len(parts) != 3:
        raise ConfigError(f"--coords expects three comma-separated integers, got {text!r}")
    return parts


def manifest_path(output: str) -> Path:
    return Path(f"{output}.manifest.json")


def sibling(output: str, suffix: str) -> Path:
    path = Path(output)
    return path.with_name(f"{path.stem}.{suffix}.csv")


# Shared loading helpers

def load_inputs(config: RunConfig) -> List[SeriesGroup]:
    """`--group` directories, plus loose `--in` files as one group named "inputs"."""
    groups = [load_group(d, config.input_format, config.fs) for d in config.groups]
    if config.inputs:
        members = [load_series(p, config.input_format, config.fs).with_group("inputs") for p in config.inputs]
        groups.append(SeriesGroup(name="inputs", members=tuple(members)))
    if not groups:
        raise ConfigError("no input series: pass --in files or --group directories")
    return groups


def resolve_params(config: RunConfig, settings: Settings, group: SeriesGroup) -> GroupEmbeddingParams:
    if config.lag is not None and config.dim is not None:
        return GroupEmbeddingParams(m=config.dim, lag=config.lag)
    params = group_embedding_params(
        group,
        max_lag=config.max_lag,
        max_dim=config.max_dim,
        fnn_threshold=config.fnn_threshold,
        lag_method=config.lag_method,
        rtol=config.fnn_rtol,
        atol=config.fnn_atol,
        brute_force_limit=settings.embedding.brute_force_limit,
        lag=config.lag,
        n_jobs=settings.n_jobs,
    )
    if config.dim is not None:
        return GroupEmbeddingParams(m=config.dim, lag=params.lag)
    return params


def cgs_record(result: CgsResult) -> Dict[str, Any]:
    row = result.model_dump(exclude={"coords", "centroid"})
    row["coords"] = "-".join(str(c) for c in result.coords)
    centroid = result.centroid or (None, None, None)
    row.update(centroid_x=centroid[0], centroid_y=centroid[1], centroid_z=centroid[2])
    return row


# Command handlers

def handle_embed(config: RunConfig, settings: Settings) -> Outputs:
    records, failures, group_params = [], {}, {}
    for group in load_inputs(config):
        dims, lags = [], []
        for series in group.members:
            try:
                report = estimate_embedding(
                    series,
                    max_lag=config.max_lag,
                    max_dim=config.max_dim,
                    fnn_threshold=config.fnn_threshold,
                    rtol=config.fnn_rtol,
                    atol=config.fnn_atol,
                    lag_method=config.lag_method,
                    brute_force_limit=settings.embedding.brute_force_limit,
                    lag=config.lag,
                )
            except CgsError as e:
                failures[f"{group.name}/{series.label}"] = str(e)
                continue
            dim = config.dim or report.dim
            dims.append(dim)
            lags.append(report.lag)
            row = {"group": group.name, **report.model_dump(exclude={"fnn"}), "dim": dim}
            row.update({f"fnn_{d}": f for d, f in report.fnn.fractions.items()})
            records.append(row)
        if dims:
            group_params[group.name] = {"m": min(dims), "lag": min(lags)}
    if failures:
        raise EstimationError("embedding estimation failed", failures)
    return [write_records(records, config.output, config.output_format)], {"groups": group_params}


def handle_sweep(config: RunConfig, settings: Settings) -> Outputs:
    records, optima = [], {}
    for group in load_inputs(config):
        params = resolve_params(config, settings, group)
        curve = group_volume_curve(group, params, config.coords, grid_size=config.alpha_grid_size)
        optima[group.name] = optimal_alpha(curve, config.rel_tol)
        records.extend(
            {"group": group.name, "alpha": a, "volume": v, "hull_volume": curve.hull_volume}
            for a, v in curve.samples
        )
    extras = {"optimal_alphas": optima, "common_alpha": max(optima.values())}
    return [write_records(records, config.output, config.output_format)], extras


def mesh_path(mesh_out: str, group: str) -> Path:
    path = Path(mesh_out)
    return path.with_name(f"{path.stem}.{group}{path.suffix}")


def export_meshes(mesh_out: str, groups: List[SeriesGroup], pooled: List[CgsResult],
                  params: Dict[str, GroupEmbeddingParams]) -> List[Path]:
    """Boundary of every pooled shape at the alpha it was measured with."""
    by_name = {g.name: g for g in groups}
    export = export_off if Path(mesh_out).suffix.lower() == ".off" else export_stl
    written = []
    for result in pooled:
        shape = pooled_shape(by_name[result.group], result.alpha, result.coords, params[result.group])
        written.append(export(shape, mesh_path(mesh_out, result.group)))
    return written


def handle_cgs(config: RunConfig, settings: Settings) -> Outputs:
    groups = load_inputs(config)
    if config.mesh_out and config.mode == "per-series":
        raise ConfigError("--mesh-out needs pooled shapes: use --mode pooled or both")
    params = {g.name: resolve_params(config, settings, g) for g in groups}
    study_settings = settings.model_copy(deep=True)
    study_settings.geometry.grid_size = config.alpha_grid_size
    study_settings.geometry.rel_tol = config.rel_tol
    study_settings.cgs.trim_quantile = config.trim_quantile
    study_settings.cgs.measure = config.measure

    def report_stage(payload: Dict[str, Any]) -> None:
        if payload["status"] == "completed":
            console.print(f"[green]{payload['progress']:3d}%[/green] {payload['message']}")

    alpha = config.alpha if config.alpha == "auto" else float(config.alpha)
    study = run_cgs_study(groups, alpha, settings=study_settings, mode=config.mode, coords=config.coords,
                          status_callback=report_stage, params=params)
    results = study["pooled"] + study["per_series"]
    extras = {
        "alpha": study["alpha"],
        "optimal_alphas": study["optimal_alphas"],
        "params": {k: v.model_dump() for k, v in study["params"].items()},
        "degenerate": sum(r.degenerate for r in results),
    }
    outputs = [write_records((cgs_record(r) for r in results), config.output, config.output_format)]
    if config.mesh_out:
        outputs.extend(export_meshes(config.mesh_out, groups, study["pooled"], params))
    return outputs, extras


def handle_combos(config: RunConfig, settings: Settings) -> Outputs:
    groups = load_inputs(config)
    params = {g.name: resolve_params(config, settings, g) for g in groups}
    optima = {}
    if config.alpha == "auto":
        optima = group_optimal_alphas(groups, grid_size=config.alpha_grid_size, rel_tol=config.rel_tol,
                                      coords=config.coords, params=params)
        alpha = max(optima.values())
    else:
        alpha = float(config.alpha)

    records, spread = [], {}
    for group in groups:
        volumes = coord_combination_volumes(group, alpha, params=params[group.name], n_jobs=settings.n_jobs)
        records.extend({"group": group.name, "i": i, "j": j, "k": k, "volume": v}
                       for (i, j, k), v in volumes.items())
        q1, median, q3 = np.percentile(list(volumes.values()), [25, 50, 75])
        spread[group.name] = {"median": float(median), "iqr": float(q3 - q1), "n": len(volumes)}
    extras = {"alpha": alpha, "optimal_alphas": optima, "spread": spread}
    return [write_records(records, config.output, config.output_format)], extras


def _read_results(path: str) -> pd.DataFrame:
    if path.endswith(".json"):
        return pd.DataFrame(json.loads(Path(path).read_text(encoding="utf-8")))
    return pd.read_csv(path)


def handle_compare(config: RunConfig, settings: Settings) -> Outputs:
    if not config.inputs:
        raise ConfigError("compare needs --in result files from the cgs command")
    frame = pd.concat([_read_results(p) for p in config.inputs], ignore_index=True)
    for required in ("group", config.column):
        if required not in frame.columns:
            raise StatsError(f"result files have no {required!r} column")
    if "source" in frame.columns:
        frame = frame[frame["source"] != "pooled"]
    excluded = 0
    if "degenerate" in frame.columns:
        degenerate = frame["degenerate"].astype(bool)
        excluded = int(degenerate.sum())
        frame = frame[~degenerate]

    samples = {str(g): sub[config.column].to_numpy(dtype=np.float64) for g, sub in frame.groupby("group", sort=False)}
    if len(samples) < 2:
        raise StatsError(f"compare needs at least two groups, found {len(samples)}")

    summary = [{"group": g, **summary_stats(v).model_dump()} for g, v in samples.items()]
    densities = {g: kde(v, grid_size=settings.stats.kde_grid_size, label=g) for g, v in samples.items()}
    discrepancy = pairwise_intrinsic_discrepancy(densities, settings.stats.kl_floor)
    kl = {a: {b: kl_divergence(densities[a], densities[b], settings.stats.kl_floor) for b in densities}
          for a in densities}
    pairwise = pairwise_wilcoxon_bonferroni(samples, settings.stats.exact_threshold)
    kruskal = kruskal_wallis(samples)
    wilcoxon = None
    if len(samples) == 2:
        wilcoxon = wilcoxon_rank_sum(*samples.values(), exact_threshold=settings.stats.exact_threshold)

    density_rows = pd.concat(
        [d.to_frame().assign(group=g)[["group", "x", "density"]] for g, d in densities.items()],
        ignore_index=True,
    )
    outputs = [write_frame_csv(density_rows, sibling(config.output, "density"))]

    tests = [{"test": "kruskal-wallis", "group_a": None, "group_b": None, "statistic": kruskal.statistic,
              "p_value": kruskal.p_value, "p_adjusted": None, "exact": False}]
    if wilcoxon is not None:
        a, b = list(samples)
        tests.append({"test": "wilcoxon", "group_a": a, "group_b": b, "statistic": wilcoxon.statistic,
                      "p_value": wilcoxon.p_value, "p_adjusted": None, "exact": wilcoxon.exact})
    labels = pairwise.labels
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            tests.append({"test": "pairwise-wilcoxon", "group_a": labels[i], "group_b": labels[j],
                          "statistic": None, "p_value": pairwise.raw[i][j],
                          "p_adjusted": pairwise.adjusted[i][j], "exact": None})

    if config.output_format == "json":
        document = {
            "column": config.column,
            "excluded_degenerate": excluded,
            "summary": summary,
            "intrinsic_discrepancy": discrepancy.to_dict(),
            "kl_divergence": kl,
            "kruskal_wallis": kruskal.model_dump(),
            "wilcoxon": wilcoxon.model_dump() if wilcoxon else None,
            "pairwise": pairwise.model_dump(),
        }
        outputs.insert(0, write_json(document, config.output))
    else:
        outputs.insert(0, write_records(summary, config.output, "csv"))
        outputs.append(write_records(tests, sibling(config.output, "tests"), "csv"))
        outputs.append(write_frame_csv(discrepancy, sibling(config.output, "discrepancy"), index=True))
    return outputs, {"excluded_degenerate": excluded, "groups": list(samples)}


def handle_ccf(config: RunConfig, settings: Settings) -> Outputs:
    rows = [s for g in load_inputs(config) for s in g.members]
    cols = None
    if config.groups_b:
        cols = [s for d in config.groups_b for s in load_group(d, config.input_format, config.fs).members]
    matrix = distance_matrix(rows, cols, max_lag=config.max_lag, variant=config.variant,
                             positive_only=config.positive_only, truncate=config.truncate,
                             n_jobs=settings.n_jobs, max_lag_cap=settings.ccf.max_lag_cap)
    if config.output_format == "json":
        outputs = [write_json({"row_labels": matrix.row_labels, "col_labels": matrix.col_labels,
                               "values": matrix.values, "variant": matrix.variant,
                               "max_lag": matrix.max_lag, "positive_only": matrix.positive_only},
                              config.output)]
    else:
        outputs = [write_frame_csv(matrix.to_frame(), config.output, index=True)]
    extras: Dict[str, Any] = {"max_lag": matrix.max_lag}
    if config.kmeans_k:
        clusters = cluster_matrix_rows(matrix, config.kmeans_k, config.seed, settings.stats.kmeans_max_iter)
        extras["clusters"] = clusters
        cluster_rows = [{"label": k, "cluster": v} for k, v in clusters.items()]
        outputs.append(write_records(cluster_rows, sibling(config.output, "clusters"), "csv"))
    return outputs, extras


def handle_lorenz(config: RunConfig, settings: Settings) -> Outputs:
    params = LorenzParams(s=config.s, r=config.r, b=config.b, x0=tuple(settings.dynsys.x0), dt=config.dt,
                          t_end=config.t_end, transient=config.transient)
    frame = trajectory_to_frame(lorenz_trajectory(params))
    if config.output_format == "json":
        path = write_json(frame.to_dict(orient="records"), config.output)
    else:
        path = write_frame_csv(frame, config.output)
    return [path], {"n_states": len(frame), "equilibria": lorenz_equilibria(params).tolist()}


def handle_paraboloid(config: RunConfig, settings: Settings) -> Outputs:
    frame = pd.DataFrame(paraboloid_sample(config.n, config.seed), columns=["x", "y", "z"])
    if config.output_format == "json":
        path = write_json(frame.to_dict(orient="records"), config.output)
    else:
        path = write_frame_csv(frame, config.output)
    return [path], {"n": config.n}


HANDLERS: Dict[str, Callable[[RunConfig, Settings], Outputs]] = {
    "embed": handle_embed,
    "sweep-alpha": handle_sweep,
    "cgs": handle_cgs,
    "combos": handle_combos,
    "compare": handle_compare,
    "ccf-matrix": handle_ccf,
    "gen-lorenz": handle_lorenz,
    "gen-paraboloid": handle_paraboloid,
}


def write_manifest(config: RunConfig, outputs: List[Path], extras: Dict[str, Any], settings: Settings) -> Path:
    manifest = RunManifest(
        version=__version__,
        config=config,
        outputs=[describe_output(p) for p in outputs],
        extras={**non_finite_as_text(extras), "settings": settings.model_dump(mode="json")},
        created_at=datetime.now(timezone.utc).isoformat(),
    )
    return write_json(manifest.model_dump(mode="json"), manifest_path(config.output))


def dispatch(config: RunConfig, settings: Optional[Settings] = None) -> int:
    """Run one command; returns the process exit code."""
    try:
        settings = settings or Settings.from_yaml()
        configure_logging(settings.logging.level, settings.logging.log_dir)
        handler = HANDLERS.get(config.command)
        if handler is None:
            raise ConfigError(f"unknown command {config.command!r}")
        logger.info("Running %s -> %s", config.command, config.output)
        outputs, extras = handler(config, settings)
        manifest = write_manifest(config, outputs, extras, settings)
    except CgsError as e:
        logger.error("%s failed: %s", config.command, e)
        console.print(f"[bold red]error:[/bold red] {e}")
        return e.exit_code
    except (ValidationError, FileNotFoundError) as e:
        logger.error("%s failed: %s", config.command, e)
        console.print(f"[bold red]error:[/bold red] {e}")
        return EXIT_CODES["config"]
    except Exception:
        logger.exception("%s failed unexpectedly", config.command)
        console.print_exception()
        return EXIT_CODES["unexpected"]

    for path in outputs:
        console.print(f"wrote [cyan]{path}[/cyan]")
    console.print(f"manifest [cyan]{manifest}[/cyan]")
    return EXIT_CODES["ok"]


# typer commands

def _settings(ctx: typer.Context) -> Settings:
    return ctx.obj["settings"]


def _run(ctx: typer.Context, command: str, **options: Any) -> None:
    try:
        config = build_config(command, _settings(ctx), **options)
    except (ValidationError, ConfigError) as e:
        console.print(f"[bold red]invalid options:[/bold red] {e}")
        raise typer.Exit(EXIT_CODES["config"])
    raise typer.Exit(dispatch(config, _settings(ctx)))


@app.callback()
def main(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(None, "--config", help="config.yaml to use instead of the default"),
) -> None:
    try:
        settings = Settings.from_yaml(str(config) if config else None)
    except (ConfigError, FileNotFoundError) as e:
        console.print(f"[bold red]configuration error:[/bold red] {e}")
        raise typer.Exit(EXIT_CODES["config"])
    ctx.obj = {"settings": settings}


INPUTS = "Series file (repeatable)"
GROUPS = "Directory holding one group of series files (repeatable)"
OUTPUT = "Output file; a <output>.manifest.json is written next to it"


@app.command("embed")
def embed_command(
    ctx: typer.Context,
    inputs: Optional[List[Path]] = typer.Option(None, "--in", help=INPUTS),
    groups: Optional[List[Path]] = typer.Option(None, "--group", help=GROUPS),
    input_format: Optional[str] = typer.Option(None, "--input-format"),
    fs: Optional[float] = typer.Option(None, "--fs", help="Sampling rate in Hz"),
    lag: Optional[int] = typer.Option(None, "--lag", help="Fixed lag instead of estimating it"),
    dim: Optional[int] = typer.Option(None, "--dim", help="Fixed embedding dimension"),
    max_lag: Optional[int] = typer.Option(None, "--max-lag"),
    max_dim: Optional[int] = typer.Option(None, "--max-dim"),
    fnn_threshold: Optional[float] = typer.Option(None, "--fnn-threshold"),
    lag_method: Optional[str] = typer.Option(None, "--lag-method", help="acf, ami or both"),
    output: Path = typer.Option(..., "--out", "-o", help=OUTPUT),
    output_format: Optional[str] = typer.Option(None, "--format", help="csv or json"),
) -> None:
    """Lag and embedding dimension per series."""
    _run(ctx, "embed", inputs=inputs, groups=groups, input_format=input_format, fs=fs, lag=lag, dim=dim,
         max_lag=max_lag, max_dim=max_dim, fnn_threshold=fnn_threshold, lag_method=lag_method,
         output=output, output_format=output_format)


@app.command("sweep-alpha")
def sweep_command(
    ctx: typer.Context,
    inputs: Optional[List[Path]] = typer.Option(None, "--in", help=INPUTS),
    groups: Optional[List[Path]] = typer.Option(None, "--group", help=GROUPS),
    input_format: Optional[str] = typer.Option(None, "--input-format"),
    fs: Optional[float] = typer.Option(None, "--fs"),
    lag: Optional[int] = typer.Option(None, "--lag"),
    dim: Optional[int] = typer.Option(None, "--dim"),
    coords: Optional[str] = typer.Option(None, "--coords", help="Delay coordinates, e.g. 0,1,2"),
    grid_size: Optional[int] = typer.Option(None, "--grid-size"),
    rel_tol: Optional[float] = typer.Option(None, "--rel-tol"),
    output: Path = typer.Option(..., "--out", "-o", help=OUTPUT),
    output_format: Optional[str] = typer.Option(None, "--format"),
) -> None:
    """Pooled volume as a function of alpha, per group."""
    _run(ctx, "sweep-alpha", inputs=inputs, groups=groups, input_format=input_format, fs=fs, lag=lag,
         dim=dim, coords=coords, alpha_grid_size=grid_size, rel_tol=rel_tol,
         output=output, output_format=output_format)


@app.command("cgs")
def cgs_command(
    ctx: typer.Context,
    inputs: Optional[List[Path]] = typer.Option(None, "--in", help=INPUTS),
    groups: Optional[List[Path]] = typer.Option(None, "--group", help=GROUPS),
    input_format: Optional[str] = typer.Option(None, "--input-format"),
    fs: Optional[float] = typer.Option(None, "--fs"),
    alpha: Optional[str] = typer.Option(None, "--alpha", help="'auto' (common alpha) or a radius"),
    lag: Optional[int] = typer.Option(None, "--lag"),
    dim: Optional[int] = typer.Option(None, "--dim"),
    coords: Optional[str] = typer.Option(None, "--coords"),
    mode: Optional[str] = typer.Option(None, "--mode", help="pooled, per-series or both"),
    measure: Optional[str] = typer.Option(None, "--measure", help="volume or surface_area"),
    trim_quantile: Optional[float] = typer.Option(None, "--trim-quantile"),
    output: Path = typer.Option(..., "--out", "-o", help=OUTPUT),
    output_format: Optional[str] = typer.Option(None, "--format"),
    mesh_out: Optional[Path] = typer.Option(None, "--mesh-out", help="STL or OFF file for the pooled boundaries"),
) -> None:
    """Pooled and per-series complex geometric structures."""
    _run(ctx, "cgs", inputs=inputs, groups=groups, input_format=input_format, fs=fs, alpha=alpha, lag=lag,
         dim=dim, coords=coords, mode=mode, measure=measure, trim_quantile=trim_quantile,
         output=output, output_format=output_format, mesh_out=mesh_out)


@app.command("combos")
def combos_command(
    ctx: typer.Context,
    inputs: Optional[List[Path]] = typer.Option(None, "--in", help=INPUTS),
    groups: Optional[List[Path]] = typer.Option(None, "--group", help=GROUPS),
    input_format: Optional[str] = typer.Option(None, "--input-format"),
    fs: Optional[float] = typer.Option(None, "--fs"),
    alpha: Optional[str] = typer.Option(None, "--alpha"),
    lag: Optional[int] = typer.Option(None, "--lag"),
    dim: Optional[int] = typer.Option(None, "--dim"),
    output: Path = typer.Option(..., "--out", "-o", help=OUTPUT),
    output_format: Optional[str] = typer.Option(None, "--format"),
) -> None:
    """Pooled volume for every triple of delay coordinates."""
    _run(ctx, "combos", inputs=inputs, groups=groups, input_format=input_format, fs=fs, alpha=alpha,
         lag=lag, dim=dim, output=output, output_format=output_format)


@app.command("compare")
def compare_command(
    ctx: typer.Context,
    inputs: List[Path] = typer.Option(..., "--in", help="cgs result file (repeatable)"),
    column: Optional[str] = typer.Option(None, "--column", help="Measure column to compare"),
    output: Path = typer.Option(..., "--out", "-o", help=OUTPUT),
    output_format: Optional[str] = typer.Option(None, "--format"),
) -> None:
    """Densities, divergences and rank tests between groups of CGS measures."""
    _run(ctx, "compare", inputs=inputs, column=column, output=output, output_format=output_format)


@app.command("ccf-matrix")
def ccf_command(
    ctx: typer.Context,
    inputs: Optional[List[Path]] = typer.Option(None, "--in", help=INPUTS),
    groups: Optional[List[Path]] = typer.Option(None, "--group", help="Row group directory (repeatable)"),
    groups_b: Optional[List[Path]] = typer.Option(None, "--group-b", help="Column group directory"),
    input_format: Optional[str] = typer.Option(None, "--input-format"),
    fs: Optional[float] = typer.Option(None, "--fs"),
    max_lag: Optional[int] = typer.Option(None, "--max-lag"),
    variant: Optional[str] = typer.Option(None, "--variant", help="max-abs, one-minus-max-abs or mean"),
    positive_only: Optional[bool] = typer.Option(None, "--lags-positive-only/--lags-symmetric"),
    truncate: Optional[bool] = typer.Option(None, "--truncate/--no-truncate"),
    kmeans_k: Optional[int] = typer.Option(None, "--kmeans", help="Cluster matrix rows into k groups"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    output: Path = typer.Option(..., "--out", "-o", help=OUTPUT),
    output_format: Optional[str] = typer.Option(None, "--format"),
) -> None:
    """Cross-correlation distance matrix between series."""
    _run(ctx, "ccf-matrix", inputs=inputs, groups=groups, groups_b=groups_b, input_format=input_format, fs=fs,
         max_lag=max_lag, variant=variant, positive_only=positive_only, truncate=truncate,
         kmeans_k=kmeans_k, seed=seed, output=output, output_format=output_format)


@app.command("gen-lorenz")
def lorenz_command(
    ctx: typer.Context,
    dt: Optional[float] = typer.Option(None, "--dt"),
    t_end: Optional[float] = typer.Option(None, "--t-end"),
    transient: Optional[float] = typer.Option(None, "--transient"),
    s: Optional[float] = typer.Option(None, "--s"),
    r: Optional[float] = typer.Option(None, "--r"),
    b: Optional[float] = typer.Option(None, "--b"),
    output: Path = typer.Option(..., "--out", "-o", help=OUTPUT),
    output_format: Optional[str] = typer.Option(None, "--format"),
) -> None:
    """Lorenz trajectory (t, x, y, z)."""
    _run(ctx, "gen-lorenz", dt=dt, t_end=t_end, transient=transient, s=s, r=r, b=b, output=output,
         output_format=output_format)


@app.command("gen-paraboloid")
def paraboloid_command(
    ctx: typer.Context,
    n: Optional[int] = typer.Option(None, "--n"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    output: Path = typer.Option(..., "--out", "-o", help=OUTPUT),
    output_format: Optional[str] = typer.Option(None, "--format"),
) -> None:
    """Random points on z = x^2 + y^2."""
    _run(ctx, "gen-paraboloid", n=n, seed=seed, output=output, output_format=output_format)


@app.command("rerun")
def rerun_command(
    ctx: typer.Context,
    manifest: Path = typer.Argument(..., exists=True, dir_okay=False, help="A .manifest.json file"),
    output: Optional[Path] = typer.Option(None, "--out", "-o", help="Write to a different output path"),
) -> None:
    """Repeat a run from its manifest."""
    try:
        recorded = RunManifest.model_validate_json(manifest.read_text(encoding="utf-8"))
        settings = _settings(ctx)
        if "settings" in recorded.extras:
            settings = Settings.model_validate(recorded.extras["settings"])
    except (ValidationError, ValueError) as e:
        console.print(f"[bold red]invalid manifest:[/bold red] {e}")
        raise typer.Exit(EXIT_CODES["config"])
    config = recorded.config
    if output is not None:
        config = config.model_copy(update={"output": str(output)})
    raise typer.Exit(dispatch(config, settings))


@app.command("manifest-schema")
def manifest_schema_command(
    output: Optional[Path] = typer.Option(None, "--out", "-o"),
) -> None:
    """JSON schema of run manifests."""
    schema = RunManifest.model_json_schema()
    if output is None:
        typer.echo(json.dumps(schema, indent=2))
    else:
        write_json(schema, output)


if __name__ == "__main__":
    app()
