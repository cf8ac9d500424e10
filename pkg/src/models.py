"""
Pydantic models for result records and run configuration
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class SummaryStats(BaseModel):
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    sd: float

    @model_validator(mode="after")
    def _ordered(self) -> "SummaryStats":
        if not (self.min <= self.q1 <= self.median <= self.q3 <= self.max):
            raise ValueError("quartiles out of order")
        if self.sd < 0:
            raise ValueError("sd must be non-negative")
        return self


class LagEstimate(BaseModel):
    lag: int = Field(ge=1)
    method: Literal["acf", "ami"]
    curve: List[Tuple[int, float]]

    @model_validator(mode="after")
    def _lag_in_curve(self) -> "LagEstimate":
        if not self.curve:
            raise ValueError("curve must not be empty")
        if self.lag not in {t for t, _ in self.curve}:
            raise ValueError("lag must lie in the examined curve")
        return self


class FnnProfile(BaseModel):
    fractions: Dict[int, float]
    rtol: float = Field(gt=0)
    atol: float = Field(gt=0)
    lag: int = Field(ge=1)
    chosen_dim: Optional[int] = None

    @field_validator("fractions")
    @classmethod
    def _keys_and_range(cls, value: Dict[int, float]) -> Dict[int, float]:
        if sorted(value) != list(range(1, len(value) + 1)):
            raise ValueError("fractions must be keyed 1..max_dim")
        if any(not 0.0 <= f <= 1.0 for f in value.values()):
            raise ValueError("fractions must lie in [0, 1]")
        return value

    @property
    def max_dim(self) -> int:
        return len(self.fractions)


class DimensionChoice(BaseModel):
    dim: int = Field(ge=1)
    threshold: float
    reached: bool  # False: no dimension met the threshold, dim is max_dim


class SeriesEmbeddingReport(BaseModel):
    label: str
    n_samples: int
    lag_acf: Optional[int] = None
    lag_ami: Optional[int] = None
    lag: int
    dim: int
    dim_at_ami_lag: Optional[int] = None  # set when the AMI lag differs and was tried too
    fnn_reached: bool
    fnn: FnnProfile


class MemberEstimate(BaseModel):
    label: str
    dim: int = Field(ge=1)
    lag: int = Field(ge=1)


class GroupEmbeddingParams(BaseModel):
    m: int = Field(ge=1)
    lag: int = Field(ge=1)
    per_member: List[MemberEstimate] = Field(default_factory=list)

    @model_validator(mode="after")
    def _minima(self) -> "GroupEmbeddingParams":
        if self.per_member:
            if self.m != min(e.dim for e in self.per_member):
                raise ValueError("m must be the minimum member dimension")
            if self.lag != min(e.lag for e in self.per_member):
                raise ValueError("lag must be the minimum member lag")
        return self


class CgsResult(BaseModel):
    volume: float = Field(ge=0)
    surface_area: float = Field(ge=0)
    alpha: float = Field(ge=0)
    m: int
    lag: int
    coords: Tuple[int, int, int]
    n_points: int
    source: str  # "pooled" or the series label
    group: Optional[str] = None
    duplicates_merged: int = 0
    hull_volume: float = 0.0
    centroid: Optional[Tuple[float, float, float]] = None
    degenerate: bool = False
    note: Optional[str] = None

    @field_validator("coords")
    @classmethod
    def _distinct(cls, value: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if len(set(value)) != 3:
            raise ValueError("coords must be distinct")
        return value

    def measure(self, name: str) -> float:
        return self.surface_area if name == "surface_area" else self.volume


class VolumeCurve(BaseModel):
    samples: List[Tuple[float, float]]
    hull_volume: float

    @model_validator(mode="after")
    def _monotone(self) -> "VolumeCurve":
        alphas = [a for a, _ in self.samples]
        if not alphas:
            raise ValueError("curve must not be empty")
        if any(b <= a for a, b in zip(alphas, alphas[1:])):
            raise ValueError("alphas must be strictly increasing")
        volumes = [v for _, v in self.samples]
        if any(b < a for a, b in zip(volumes, volumes[1:])):
            raise ValueError("volumes must be non-decreasing in alpha")
        return self

    @property
    def alphas(self) -> List[float]:
        return [a for a, _ in self.samples]

    @property
    def volumes(self) -> List[float]:
        return [v for _, v in self.samples]


class TestReport(BaseModel):
    __test__ = False  # keep pytest from collecting the model

    method: Literal["wilcoxon", "kruskal-wallis"]
    statistic: float
    p_value: float = Field(ge=0, le=1)
    n: List[int]
    correction: Literal["none", "bonferroni"] = "none"
    exact: bool = False
    labels: Optional[List[str]] = None


class PairwiseReport(BaseModel):
    labels: List[str]
    raw: List[List[float]]
    adjusted: List[List[float]]
    n_pairs: int
    correction: Literal["bonferroni"] = "bonferroni"


class KMeansResult(BaseModel):
    labels: List[int]
    inertia: float
    centroids: List[List[float]]
    n_iter: int
    inertia_history: List[float]
    seed: int


class RunConfig(BaseModel):
    """Fully resolved command line; enough to reproduce a run."""

    model_config = ConfigDict(extra="forbid")

    command: Literal[
        "embed",
        "sweep-alpha",
        "cgs",
        "combos",
        "compare",
        "ccf-matrix",
        "gen-lorenz",
        "gen-paraboloid",
    ]
    inputs: List[str] = Field(default_factory=list)
    groups: List[str] = Field(default_factory=list)
    groups_b: List[str] = Field(default_factory=list)
    input_format: Literal["ascii", "csv"] = "ascii"
    fs: Optional[float] = Field(None, gt=0)
    alpha: Optional[str] = None  # "auto" or a number
    alpha_grid_size: int = 64
    rel_tol: float = 1e-3
    lag: Optional[int] = Field(None, ge=1)
    dim: Optional[int] = Field(None, ge=1)
    max_lag: Optional[int] = Field(None, ge=1)
    max_dim: int = 12
    fnn_threshold: float = 0.01
    fnn_rtol: float = 10.0
    fnn_atol: float = 2.0
    lag_method: Literal["acf", "ami", "both"] = "both"
    coords: Tuple[int, int, int] = (0, 1, 2)
    mode: Literal["pooled", "per-series", "both"] = "both"
    measure: Literal["volume", "surface_area"] = "volume"
    trim_quantile: Optional[float] = None
    variant: Literal["max-abs", "one-minus-max-abs", "mean"] = "max-abs"
    positive_only: bool = False
    truncate: bool = False
    kmeans_k: Optional[int] = None
    column: str = "volume"
    output: str
    output_format: Literal["json", "csv"] = "csv"
    mesh_out: Optional[str] = None  # .stl or .off, one file per pooled group
    seed: int = 0
    n: Optional[int] = None
    dt: Optional[float] = None
    t_end: Optional[float] = None
    transient: Optional[float] = None
    s: Optional[float] = None
    r: Optional[float] = None
    b: Optional[float] = None

    @field_validator("alpha")
    @classmethod
    def _alpha_option(cls, value: Optional[str]) -> Optional[str]:
        if value is None or value == "auto":
            return value
        try:
            parsed = float(value)
        except ValueError as e:
            raise ValueError("alpha must be 'auto' or a number") from e
        if math.isnan(parsed) or parsed < 0:
            raise ValueError("alpha must be non-negative")
        return value

    @field_validator("mesh_out")
    @classmethod
    def _mesh_suffix(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and Path(value).suffix.lower() not in (".stl", ".off"):
            raise ValueError("mesh output must end in .stl or .off")
        return value


class OutputFile(BaseModel):
    path: str
    sha256: str
    bytes: int


class RunManifest(BaseModel):
    version: str
    config: RunConfig
    outputs: List[OutputFile]
    extras: Dict[str, Any] = Field(default_factory=dict)
    created_at: str
