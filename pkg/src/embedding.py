"""
Delay-coordinate reconstruction: lag estimation (ACF first negative value,
AMI first local minimum), embedding dimension by false nearest neighbours,
and the delay map itself.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.spatial import cKDTree

from src.errors import EstimationError
from src.ingest import TimeSeries
from src.models import DimensionChoice, FnnProfile, LagEstimate, SeriesEmbeddingReport

logger = logging.getLogger(__name__)

FNN_RTOL = 10.0
FNN_ATOL = 2.0
BRUTE_FORCE_LIMIT = 5000
KD_CANDIDATES = 8

Curve = Union[Sequence[float], Sequence[Tuple[int, float]]]


class DelayEmbedding(BaseModel):
    """Points are rows: point i is (s[i], s[i+lag], ..., s[i+(dim-1)lag])."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lag: int
    dim: int
    points: np.ndarray
    source_length: int
    label: Optional[str] = None

    @field_validator("points", mode="before")
    @classmethod
    def _readonly(cls, value) -> np.ndarray:
        arr = np.ascontiguousarray(value, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("points must be a 2-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding coordinates must be finite")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _count(self) -> "DelayEmbedding":
        if self.lag < 1 or self.dim < 1:
            raise ValueError("lag and dim must be positive")
        expected = self.source_length - (self.dim - 1) * self.lag
        if self.points.shape != (expected, self.dim):
            raise ValueError(f"expected {expected} points of dimension {self.dim}")
        return self

    @property
    def n_points(self) -> int:
        return int(self.points.shape[0])


def _samples(series: Union[TimeSeries, Sequence[float], np.ndarray]) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.samples
    return np.asarray(series, dtype=np.float64)


def _check_max_lag(n: int, max_lag: int) -> None:
    if max_lag < 0 or max_lag >= n:
        raise ValueError(f"max_lag must be in [0, {n - 1}], got {max_lag}")


def acf(series, max_lag: int) -> np.ndarray:
    """
    Sample autocorrelation at lags 0..max_lag, normalised by the centred sum
    of squares of the whole series (so lag 0 is exactly 1).
    """
    s = _samples(series)
    n = s.size
    _check_max_lag(n, max_lag)
    centred = s - s.mean()
    denom = float(np.dot(centred, centred))
    if denom == 0.0:
        raise EstimationError("ACF undefined for a constant series")
    out = np.empty(max_lag + 1)
    for t in range(max_lag + 1):
        out[t] = np.dot(centred[t:], centred[: n - t]) / denom
    return out


def _as_pairs(curve: Curve, first_lag: int) -> list[Tuple[int, float]]:
    items = list(curve)
    if items and isinstance(items[0], (tuple, list)):
        return [(int(t), float(v)) for t, v in items]
    return [(first_lag + i, float(v)) for i, v in enumerate(items)]


def lag_from_acf(curve: Curve, first_lag: int = 0) -> LagEstimate:
    """Smallest lag t > 0 with ACF(t) < 0."""
    pairs = _as_pairs(curve, first_lag)
    for t, value in pairs:
        if t > 0 and value < 0:
            return LagEstimate(lag=t, method="acf", curve=pairs)
    raise EstimationError("ACF has no negative value within max_lag; extend max_lag")


def default_ami_bins(n: int) -> int:
    return int(min(64, max(8, math.ceil(math.sqrt(n)))))


def ami(series, max_lag: int, bins: Optional[int] = None) -> np.ndarray:
    """
    Average mutual information (bits) between s(n) and s(n+t), t=0..max_lag,
    from equal-width 2-D histograms over the series range.
    """
    s = _samples(series)
    n = s.size
    _check_max_lag(n, max_lag)
    bins = default_ami_bins(n) if bins is None else bins
    if bins < 2:
        raise ValueError("bins must be at least 2")
    lo, hi = float(s.min()), float(s.max())
    if hi == lo:
        raise EstimationError("AMI undefined for a constant series")

    idx = np.floor((s - lo) / (hi - lo) * bins).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)

    out = np.empty(max_lag + 1)
    for t in range(max_lag + 1):
        a, b = idx[: n - t], idx[t:]
        joint = np.bincount(a * bins + b, minlength=bins * bins).reshape(bins, bins)
        p_ab = joint / joint.sum()
        p_a = p_ab.sum(axis=1)
        p_b = p_ab.sum(axis=0)
        nz = p_ab > 0
        outer = np.outer(p_a, p_b)
        out[t] = float(np.sum(p_ab[nz] * np.log2(p_ab[nz] / outer[nz])))
    return out


def lag_from_ami(curve: Curve, first_lag: int = 0) -> LagEstimate:
    """
    First strict local minimum: I(t-1) > I(t) and the next different value
    after t is larger (flat stretches are walked to their end).
    """
    pairs = _as_pairs(curve, first_lag)
    if len(pairs) < 3:
        raise ValueError("AMI curve needs at least 3 values")
    values = [v for _, v in pairs]
    for i in range(1, len(values) - 1):
        if not values[i - 1] > values[i]:
            continue
        j = i + 1
        while j < len(values) and values[j] == values[i]:
            j += 1
        if j < len(values) and values[j] > values[i]:
            return LagEstimate(lag=max(pairs[i][0], 1), method="ami", curve=pairs)
    raise EstimationError("AMI has no local minimum within max_lag; extend max_lag")


def _nearest_brute(points: np.ndarray, chunk: int = 512) -> Tuple[np.ndarray, np.ndarray]:
    """Exact nearest neighbour (excluding self), ties to the lowest index."""
    n = points.shape[0]
    nn = np.empty(n, dtype=np.int64)
    d2 = np.empty(n)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = points[start:stop, None, :] - points[None, :, :]
        dist = np.sum(diff * diff, axis=-1)
        dist[np.arange(stop - start), np.arange(start, stop)] = np.inf
        j = np.argmin(dist, axis=1)
        nn[start:stop] = j
        d2[start:stop] = dist[np.arange(stop - start), j]
    return nn, d2


def _nearest_kd(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    k-d tree candidates re-ranked with the brute-force distance formula;
    rows whose tie set may extend past the candidate list fall back to the
    exhaustive scan, so the answer matches `_nearest_brute`.
    """
    n = points.shape[0]
    k = min(n, KD_CANDIDATES + 1)
    tree = cKDTree(points)
    _, cand = tree.query(points, k=k)
    cand = np.asarray(cand).reshape(n, k)

    diff = points[:, None, :] - points[cand]
    dist = np.sum(diff * diff, axis=-1)
    dist[cand == np.arange(n)[:, None]] = np.inf

    best = np.full(n, np.inf)
    nn = np.full(n, -1, dtype=np.int64)
    for col in range(k):
        c, d = cand[:, col], dist[:, col]
        better = (d < best) | ((d == best) & (c < nn))
        best = np.where(better, d, best)
        nn = np.where(better, c, nn)

    # the farthest candidate is (nearly) as close as the best one: ties may hide beyond k
    unsure = np.max(np.where(np.isinf(dist), -np.inf, dist), axis=1) <= best * (1 + 1e-9)
    unsure &= k < n
    if np.any(unsure):
        rows = np.flatnonzero(unsure)
        for i in rows:
            diff_i = points - points[i]
            d_i = np.sum(diff_i * diff_i, axis=-1)
            d_i[i] = np.inf
            j = int(np.argmin(d_i))
            nn[i], best[i] = j, d_i[j]
    return nn, best


def nearest_neighbors(points: np.ndarray, brute_force_limit: int = BRUTE_FORCE_LIMIT):
    if points.shape[0] < 2:
        raise ValueError("nearest neighbours need at least 2 points")
    if points.shape[0] < brute_force_limit:
        return _nearest_brute(points)
    return _nearest_kd(points)


def fnn_fractions(series, lag: int, max_dim: int, rtol: float = FNN_RTOL,
                  atol: float = FNN_ATOL, brute_force_limit: int = BRUTE_FORCE_LIMIT) -> FnnProfile:
    """
    Fraction of false nearest neighbours for d = 1..max_dim. A neighbour in
    dimension d is false when adding coordinate d+1 stretches the pair by more
    than `rtol` times its distance, or makes the pair's distance exceed `atol`
    times the series' standard deviation.
    """
    s = _samples(series)
    n = s.size
    if lag < 1 or max_dim < 1:
        raise ValueError("lag and max_dim must be positive")
    if n - max_dim * lag < 2:
        raise EstimationError(f"series of length {n} too short for max_dim={max_dim} at lag={lag}")
    spread = float(np.std(s))

    fractions = {}
    for d in range(1, max_dim + 1):
        count = n - d * lag
        windows = sliding_window_view(s, d * lag + 1)[:count, ::lag]
        base = np.ascontiguousarray(windows[:, :d])
        extra_coord = windows[:, d]
        nn, d2 = nearest_neighbors(base, brute_force_limit)
        dist = np.sqrt(d2)
        extra = np.abs(extra_coord - extra_coord[nn])
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = extra / dist
            rel = np.where(dist == 0, np.where(extra > 0, np.inf, 0.0), rel)
            lifted = np.sqrt(d2 + extra * extra)
            absolute = lifted / spread if spread > 0 else np.zeros_like(lifted)
        false = (rel > rtol) | (absolute > atol)
        fractions[d] = float(np.count_nonzero(false)) / count
        logger.debug("FNN d=%d: %.4f", d, fractions[d])
    return FnnProfile(fractions=fractions, rtol=rtol, atol=atol, lag=lag)


def dim_from_fnn(profile: FnnProfile, threshold: float = 0.01) -> DimensionChoice:
    """Smallest d whose false-neighbour fraction is at most `threshold`."""
    for d in sorted(profile.fractions):
        if profile.fractions[d] <= threshold:
            return DimensionChoice(dim=d, threshold=threshold, reached=True)
    logger.warning("FNN fraction never fell to %.4f; using max_dim=%d", threshold, profile.max_dim)
    return DimensionChoice(dim=profile.max_dim, threshold=threshold, reached=False)


def delay_embed(series, lag: int, dim: int) -> DelayEmbedding:
    s = _samples(series)
    n = s.size
    if lag < 1 or dim < 1:
        raise ValueError("lag and dim must be positive")
    span = (dim - 1) * lag
    if n <= span:
        raise EstimationError(f"series of length {n} too short to embed at dim={dim}, lag={lag}")
    points = sliding_window_view(s, span + 1)[:, ::lag]
    label = series.label if isinstance(series, TimeSeries) else None
    return DelayEmbedding(lag=lag, dim=dim, points=points, source_length=n, label=label)


def project_coords(embedding: DelayEmbedding, triple: Tuple[int, int, int]) -> np.ndarray:
    """Order-preserving projection of every point onto coordinates (i, j, k)."""
    triple = tuple(int(i) for i in triple)
    if len(triple) != 3 or len(set(triple)) != 3:
        raise ValueError(f"coordinate triple must hold 3 distinct indices, got {triple}")
    if min(triple) < 0 or max(triple) >= embedding.dim:
        raise ValueError(f"coordinate indices must be < dim={embedding.dim}, got {triple}")
    return np.ascontiguousarray(embedding.points[:, list(triple)])


def estimate_embedding(series: TimeSeries, max_lag: int = 200, max_dim: int = 12,
                       fnn_threshold: float = 0.01, rtol: float = FNN_RTOL, atol: float = FNN_ATOL,
                       lag_method: str = "both", bins: Optional[int] = None,
                       brute_force_limit: int = BRUTE_FORCE_LIMIT,
                       lag: Optional[int] = None) -> SeriesEmbeddingReport:
    """
    Lag and dimension for one series. Both lag estimators are attempted. With
    "both" (the default) the ACF lag is reported and the dimension is the
    smaller of the FNN dimensions at the ACF and AMI lags; "acf" and "ami" use
    that estimator alone. A fixed `lag` bypasses the estimators for the FNN step.
    """
    n = len(series)
    max_lag = min(max_lag, n - 1)

    lag_acf = lag_ami = None
    failures = {}
    try:
        lag_acf = lag_from_acf(acf(series, max_lag)).lag
    except EstimationError as e:
        failures["acf"] = str(e)
    try:
        lag_ami = lag_from_ami(ami(series, max_lag, bins)).lag
    except EstimationError as e:
        failures["ami"] = str(e)

    if lag_acf is not None and lag_ami is not None and lag_acf != lag_ami:
        logger.info("%s: ACF lag %d, AMI lag %d", series.label, lag_acf, lag_ami)

    if lag_method == "ami":
        primary = lag_ami
    elif lag_method == "both" and lag_acf is None:
        primary = lag_ami
    else:
        primary = lag_acf
    if lag is not None:
        primary = lag
    elif primary is None:
        raise EstimationError(f"lag estimation failed for {series.label}", failures)

    profile = fnn_fractions(series, primary, max_dim, rtol, atol, brute_force_limit)
    choice = dim_from_fnn(profile, fnn_threshold)
    dim, reached = choice.dim, choice.reached

    dim_at_ami_lag = None
    if lag is None and lag_method == "both" and lag_ami is not None and lag_ami != primary:
        other = dim_from_fnn(fnn_fractions(series, lag_ami, max_dim, rtol, atol, brute_force_limit),
                             fnn_threshold)
        dim_at_ami_lag = other.dim
        if other.dim < dim:
            dim, reached = other.dim, other.reached

    return SeriesEmbeddingReport(
        label=series.label,
        n_samples=n,
        lag_acf=lag_acf,
        lag_ami=lag_ami,
        lag=primary,
        dim=dim,
        dim_at_ami_lag=dim_at_ami_lag,
        fnn_reached=reached,
        fnn=profile.model_copy(update={"chosen_dim": dim}),
    )
