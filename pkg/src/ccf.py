"""
Cross-correlation distances between series, the connectivity baseline the
CGS measures are compared against.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, List, Literal, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from src.errors import StatsError
from src.ingest import SeriesGroup, TimeSeries
from src.parallel import parallel_map
from src.stats import kmeans

logger = logging.getLogger(__name__)

Variant = Literal["max-abs", "one-minus-max-abs", "mean"]
VARIANTS = ("max-abs", "one-minus-max-abs", "mean")
MAX_LAG_CAP = 200


class CcfCurve(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lags: np.ndarray
    values: np.ndarray

    @field_validator("lags", "values", mode="before")
    @classmethod
    def _readonly(cls, value) -> np.ndarray:
        arr = np.array(value)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _same_length(self) -> "CcfCurve":
        if self.lags.shape != self.values.shape:
            raise ValueError("lags and values must have the same length")
        return self

    def at(self, lag: int) -> float:
        idx = np.flatnonzero(self.lags == lag)
        if idx.size == 0:
            raise KeyError(lag)
        return float(self.values[idx[0]])


class DistanceMatrix(BaseModel):
    """Entry (i, j) is the distance between row series i and column series j."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    row_labels: List[str]
    col_labels: List[str]
    values: np.ndarray
    variant: Variant
    max_lag: int
    positive_only: bool = False

    @model_validator(mode="after")
    def _dimensions(self) -> "DistanceMatrix":
        if self.values.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError("matrix dimensions do not match the label lists")
        return self

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=self.row_labels, columns=self.col_labels)


def default_max_lag(n: int, cap: int = MAX_LAG_CAP) -> int:
    """ceil(n / 10), capped, and always below n."""
    return max(1, min(math.ceil(n / 10), cap, n - 1))


def _lags(max_lag: int, positive_only: bool) -> np.ndarray:
    return np.arange(1, max_lag + 1) if positive_only else np.arange(-max_lag, max_lag + 1)


def _values(s: Union[TimeSeries, Sequence[float], np.ndarray]) -> np.ndarray:
    return s.samples if isinstance(s, TimeSeries) else np.asarray(s, dtype=np.float64)


def _label(s, default: str) -> str:
    return s.label if isinstance(s, TimeSeries) else default


def ccf(x, y, max_lag: int, positive_only: bool = False, truncate: bool = False) -> CcfCurve:
    """
    Normalized cross-correlation sum_t xc[t] yc[t+lag] / sqrt(Sxx Syy) with
    full-series means; lags -max_lag..max_lag, or 1..max_lag when
    `positive_only`.
    """
    xs, ys = _values(x), _values(y)
    if xs.size != ys.size:
        if not truncate:
            raise StatsError(f"length mismatch: {_label(x, 'x')} has {xs.size} samples, "
                             f"{_label(y, 'y')} has {ys.size}")
        n = min(xs.size, ys.size)
        xs, ys = xs[:n], ys[:n]
    n = xs.size
    if not 0 < max_lag < n:
        raise StatsError(f"max_lag must be in [1, {n - 1}], got {max_lag}")

    xc, yc = xs - xs.mean(), ys - ys.mean()
    sxx, syy = np.sum(xc * xc), np.sum(yc * yc)
    if sxx == 0 or syy == 0:
        raise StatsError("cross-correlation undefined for a constant series")
    denom = math.sqrt(sxx * syy)

    lags = _lags(max_lag, positive_only)
    out = np.empty(lags.size)
    for i, lag in enumerate(lags):
        if lag >= 0:
            out[i] = np.sum(xc[: n - lag] * yc[lag:]) / denom
        else:
            out[i] = np.sum(xc[-lag:] * yc[: n + lag]) / denom
    return CcfCurve(lags=lags, values=out)


def distance_from_curve(curve: CcfCurve, variant: Variant = "max-abs") -> float:
    if variant == "max-abs":
        return float(np.max(np.abs(curve.values)))
    if variant == "one-minus-max-abs":
        return 1.0 - float(np.max(np.abs(curve.values)))
    if variant == "mean":
        return math.fsum(curve.values) / curve.values.size
    raise ValueError(f"unknown CCF variant {variant!r}; expected one of {VARIANTS}")


def ccf_distance(x, y, max_lag: int, variant: Variant = "max-abs", positive_only: bool = False,
                 truncate: bool = False) -> float:
    return distance_from_curve(ccf(x, y, max_lag, positive_only, truncate), variant)


def _members(group) -> List[TimeSeries]:
    return list(group.members) if isinstance(group, SeriesGroup) else list(group)


def distance_matrix(group_a, group_b=None, max_lag: Optional[int] = None,
                    variant: Variant = "max-abs", positive_only: bool = False,
                    truncate: bool = False, n_jobs: Optional[int] = None,
                    max_lag_cap: int = MAX_LAG_CAP) -> DistanceMatrix:
    """Every series of `group_a` against every series of `group_b` (itself when omitted)."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown CCF variant {variant!r}; expected one of {VARIANTS}")
    rows = _members(group_a)
    cols = rows if group_b is None else _members(group_b)
    if not rows or not cols:
        raise StatsError("distance matrix needs non-empty groups")

    lengths = {s.label: len(s) for s in rows + cols}
    n = min(lengths.values())
    if len(set(lengths.values())) > 1:
        if not truncate:
            odd = ", ".join(f"{k}={v}" for k, v in lengths.items() if v != max(lengths.values()))
            raise StatsError(f"series lengths differ ({odd}; others {max(lengths.values())})")
        logger.warning("Truncating all series to %d samples", n)
    max_lag = default_max_lag(n, max_lag_cap) if max_lag is None else max_lag

    def row(x: TimeSeries) -> List[float]:
        return [ccf_distance(x.samples[:n], y.samples[:n], max_lag, variant, positive_only) for y in cols]

    values = np.array(parallel_map(row, rows, n_jobs), dtype=np.float64)
    logger.info("CCF %s matrix %dx%d, max_lag=%d", variant, len(rows), len(cols), max_lag)
    return DistanceMatrix(row_labels=[s.label for s in rows], col_labels=[s.label for s in cols],
                          values=values, variant=variant, max_lag=max_lag, positive_only=positive_only)


def cluster_matrix_rows(matrix: DistanceMatrix, k: int = 2, seed: int = 0,
                        max_iter: int = 300) -> Dict[str, int]:
    """k-means over the matrix rows; cluster label per row label."""
    result = kmeans(matrix.values, k, seed, max_iter)
    return dict(zip(matrix.row_labels, result.labels))
