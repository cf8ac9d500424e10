"""
Run settings: `config.yaml` validated into pydantic models, with environment
overrides loaded through python-dotenv.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.errors import ConfigError

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "config.yaml"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class IngestSettings(_Section):
    format: Literal["ascii", "csv"] = "ascii"
    fs: float = Field(173.61, gt=0)


class EmbeddingSettings(_Section):
    max_lag: int = Field(200, ge=1)
    max_dim: int = Field(12, ge=1)
    fnn_rtol: float = Field(10.0, gt=0)
    fnn_atol: float = Field(2.0, gt=0)
    fnn_threshold: float = Field(0.01, ge=0, le=1)
    lag_method: Literal["acf", "ami", "both"] = "both"
    brute_force_limit: int = Field(5000, ge=1)


class GeometrySettings(_Section):
    grid_size: int = Field(64, ge=2)
    rel_tol: float = Field(1e-3, ge=0, lt=1)


class CgsSettings(_Section):
    coords: Tuple[int, int, int] = (0, 1, 2)
    measure: Literal["volume", "surface_area"] = "volume"
    trim_quantile: Optional[float] = Field(None, gt=0, le=1)

    @field_validator("coords")
    @classmethod
    def _distinct(cls, value: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if len(set(value)) != 3 or min(value) < 0:
            raise ValueError("coords must be three distinct non-negative indices")
        return value


class StatsSettings(_Section):
    kde_grid_size: int = Field(512, ge=8)
    kl_floor: float = Field(1e-12, gt=0)
    exact_threshold: int = Field(12, ge=0)
    kmeans_max_iter: int = Field(300, ge=1)


class CcfSettings(_Section):
    variant: Literal["max-abs", "one-minus-max-abs", "mean"] = "max-abs"
    max_lag_cap: int = Field(200, ge=1)
    positive_only: bool = False


class DynsysSettings(_Section):
    s: float = 10.0
    r: float = 28.0
    b: float = 8.0 / 3.0
    x0: List[float] = Field(default_factory=lambda: [1.0, 1.0, 1.0])
    dt: float = Field(0.005, gt=0)
    t_end: float = Field(75.0, gt=0)
    transient: float = Field(10.0, ge=0)


class OutputSettings(_Section):
    format: Literal["csv", "json"] = "csv"


class LoggingSettings(_Section):
    level: str = "INFO"
    log_dir: str = "logs"


class Settings(_Section):
    ingest: IngestSettings = Field(default_factory=IngestSettings)
    embedding: EmbeddingSettings = Field(default_factory=EmbeddingSettings)
    geometry: GeometrySettings = Field(default_factory=GeometrySettings)
    cgs: CgsSettings = Field(default_factory=CgsSettings)
    stats: StatsSettings = Field(default_factory=StatsSettings)
    ccf: CcfSettings = Field(default_factory=CcfSettings)
    dynsys: DynsysSettings = Field(default_factory=DynsysSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)
    n_jobs: int = 1

    @classmethod
    def from_yaml(cls, config_path: Optional[str] = None) -> "Settings":
        """
        Load settings from `config_path` (or `CGS_CONFIG`, or the repo's
        config.yaml). Env vars `CGS_N_JOBS`, `CGS_LOG_LEVEL` and `CGS_LOG_DIR`
        take precedence over the file.
        """
        load_dotenv()
        explicit = config_path or os.getenv("CGS_CONFIG")
        path = Path(explicit) if explicit else DEFAULT_CONFIG_PATH

        if not path.exists():
            if explicit:
                raise FileNotFoundError(f"{path} not found.")
            cfg = {}
        else:
            with open(path, encoding="utf-8") as f:
                cfg = yaml.safe_load(f)
            if cfg is None:
                raise ConfigError(f"{path} is empty. It must contain at least one section.")
            if not isinstance(cfg, dict):
                raise ConfigError(f"{path} must contain a mapping of sections.")

        try:
            settings = cls.model_validate(cfg)
        except ValidationError as e:
            raise ConfigError(f"Invalid configuration in {path}: {e}") from e

        n_jobs = os.getenv("CGS_N_JOBS")
        if n_jobs:
            try:
                settings.n_jobs = int(n_jobs)
            except ValueError as e:
                raise ConfigError(f"CGS_N_JOBS must be an integer, got {n_jobs!r}") from e
        if os.getenv("CGS_LOG_LEVEL"):
            settings.logging.level = os.environ["CGS_LOG_LEVEL"]
        if os.getenv("CGS_LOG_DIR"):
            settings.logging.log_dir = os.environ["CGS_LOG_DIR"]
        return settings
