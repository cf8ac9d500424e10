"""
Density estimates, divergences, rank tests and k-means for comparing CGS
measures across groups.
"""

from __future__ import annotations

import itertools
import logging
import math
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy import stats as sps
from scipy.integrate import trapezoid
from sklearn.cluster import kmeans_plusplus

from src.errors import StatsError
from src.models import KMeansResult, PairwiseReport, TestReport

logger = logging.getLogger(__name__)

KDE_GRID_SIZE = 512
KL_FLOOR = 1e-12
EXACT_THRESHOLD = 12
NORMALIZATION_TOL = 1e-6

Samples = Union[Sequence[float], np.ndarray]


class Density(BaseModel):
    """Gaussian KDE sampled on an increasing grid, integrating to 1."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: np.ndarray
    values: np.ndarray
    bandwidth: float
    label: Optional[str] = None

    @field_validator("grid", "values", mode="before")
    @classmethod
    def _readonly(cls, value) -> np.ndarray:
        arr = np.array(value, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("density arrays must be 1-D")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check(self) -> "Density":
        if self.grid.shape != self.values.shape or self.grid.size < 2:
            raise ValueError("grid and values must have the same length >= 2")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("density values must be non-negative")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if abs(trapezoid(self.values, self.grid) - 1.0) > NORMALIZATION_TOL:
            raise ValueError("density does not integrate to 1")
        return self

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.grid, "density": self.values})


def silverman_bandwidth(values: np.ndarray) -> float:
    """0.9 * min(sd, IQR / 1.34) * n^(-1/5), falling back to sd when the IQR is 0."""
    n = values.size
    sd = float(np.std(values, ddof=1))
    q1, q3 = np.percentile(values, [25, 75])
    spread = min(sd, (q3 - q1) / 1.34)
    if spread <= 0:
        spread = sd
    return 0.9 * spread * n ** -0.2


def kde(values: Samples, bandwidth: Optional[float] = None, grid_size: int = KDE_GRID_SIZE,
        label: Optional[str] = None) -> Density:
    data = np.asarray(values, dtype=np.float64).ravel()
    if data.size < 2 or np.unique(data).size < 2:
        raise StatsError("kde needs at least two distinct values")
    if not np.all(np.isfinite(data)):
        raise StatsError("kde input must be finite")
    h = silverman_bandwidth(data) if bandwidth is None else float(bandwidth)
    if h <= 0:
        raise StatsError(f"bandwidth must be positive, got {h}")

    estimator = sps.gaussian_kde(data, bw_method=h / float(np.std(data, ddof=1)))
    grid = np.linspace(data.min() - 3 * h, data.max() + 3 * h, grid_size)
    dens = estimator(grid)
    # truncation at +-3h loses a little mass; renormalize on the grid
    dens = dens / trapezoid(dens, grid)
    return Density(grid=grid, values=dens, bandwidth=h, label=label)


def kl_divergence(f: Density, g: Density, floor: float = KL_FLOOR) -> float:
    """
    Integral of f log(f/g) over the union of both grids, with both densities
    linearly interpolated (zero outside their support) and floored at `floor`.
    """
    grid = np.union1d(f.grid, g.grid)
    fv = np.maximum(np.interp(grid, f.grid, f.values, left=0.0, right=0.0), floor)
    gv = np.maximum(np.interp(grid, g.grid, g.values, left=0.0, right=0.0), floor)
    return float(trapezoid(fv * np.log(fv / gv), grid))


def intrinsic_discrepancy(f: Density, g: Density, floor: float = KL_FLOOR) -> float:
    return min(kl_divergence(f, g, floor), kl_divergence(g, f, floor))


def pairwise_intrinsic_discrepancy(densities: Mapping[str, Density],
                                   floor: float = KL_FLOOR) -> pd.DataFrame:
    labels = list(densities)
    matrix = pd.DataFrame(0.0, index=labels, columns=labels)
    for a, b in itertools.combinations(labels, 2):
        value = intrinsic_discrepancy(densities[a], densities[b], floor)
        matrix.loc[a, b] = matrix.loc[b, a] = value
    return matrix


def _sample(values: Samples, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise StatsError(f"sample {name} is empty")
    return arr


def wilcoxon_rank_sum(x: Samples, y: Samples, exact_threshold: int = EXACT_THRESHOLD) -> TestReport:
    """
    Two-sided Wilcoxon-Mann-Whitney test. Small samples without ties are
    enumerated exactly; otherwise the normal approximation with tie and
    continuity correction is used. The statistic is U for `x`.
    """
    xs, ys = _sample(x, "x"), _sample(y, "y")
    pooled = np.concatenate([xs, ys])
    exact = pooled.size <= exact_threshold and np.unique(pooled).size == pooled.size
    if np.unique(pooled).size == 1:
        # every value tied: no information about location
        return TestReport(method="wilcoxon", statistic=xs.size * ys.size / 2.0, p_value=1.0,
                          n=[xs.size, ys.size], exact=exact)
    res = sps.mannwhitneyu(xs, ys, alternative="two-sided", use_continuity=True,
                           method="exact" if exact else "asymptotic")
    p = float(min(1.0, max(0.0, res.pvalue)))
    logger.debug("Wilcoxon U=%g p=%.4g (n=%d, %d, exact=%s)", res.statistic, p, xs.size, ys.size, exact)
    return TestReport(method="wilcoxon", statistic=float(res.statistic), p_value=p,
                      n=[xs.size, ys.size], exact=exact)


def _named(groups: Union[Mapping[str, Samples], Sequence[Samples]]) -> Dict[str, np.ndarray]:
    if isinstance(groups, Mapping):
        items = groups.items()
    else:
        items = ((f"group{i + 1}", g) for i, g in enumerate(groups))
    return {str(k): _sample(v, str(k)) for k, v in items}


def kruskal_wallis(groups: Union[Mapping[str, Samples], Sequence[Samples]]) -> TestReport:
    """H statistic with tie correction, p from chi-square with k-1 degrees of freedom."""
    named = _named(groups)
    if len(named) < 2:
        raise StatsError("Kruskal-Wallis needs at least two groups")
    samples = list(named.values())
    n = [s.size for s in samples]
    if np.unique(np.concatenate(samples)).size == 1:
        return TestReport(method="kruskal-wallis", statistic=0.0, p_value=1.0, n=n, labels=list(named))
    res = sps.kruskal(*samples)
    return TestReport(method="kruskal-wallis", statistic=float(res.statistic),
                      p_value=float(min(1.0, max(0.0, res.pvalue))), n=n, labels=list(named))


def pairwise_wilcoxon_bonferroni(groups: Union[Mapping[str, Samples], Sequence[Samples]],
                                 exact_threshold: int = EXACT_THRESHOLD) -> PairwiseReport:
    """Raw and Bonferroni-adjusted p-values for every pair of groups (diagonal 1)."""
    named = _named(groups)
    labels = list(named)
    k = len(labels)
    if k < 2:
        raise StatsError("pairwise comparison needs at least two groups")
    n_pairs = k * (k - 1) // 2
    raw = np.ones((k, k))
    for i, j in itertools.combinations(range(k), 2):
        p = wilcoxon_rank_sum(named[labels[i]], named[labels[j]], exact_threshold).p_value
        raw[i, j] = raw[j, i] = p
    adjusted = np.minimum(raw * n_pairs, 1.0)
    np.fill_diagonal(adjusted, 1.0)
    return PairwiseReport(labels=labels, raw=raw.tolist(), adjusted=adjusted.tolist(), n_pairs=n_pairs)


def _assign(rows: np.ndarray, centroids: np.ndarray):
    d2 = np.sum((rows[:, None, :] - centroids[None, :, :]) ** 2, axis=-1)
    labels = np.argmin(d2, axis=1)
    return labels, math.fsum(d2[np.arange(rows.shape[0]), labels])


def kmeans(rows, k: int, seed: int = 0, max_iter: int = 300) -> KMeansResult:
    """
    Lloyd iterations from k-means++ seeds. Distance ties go to the lower
    cluster index; an emptied cluster keeps its previous centroid.
    """
    data = np.asarray(rows, dtype=np.float64)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2 or data.shape[0] == 0:
        raise StatsError("kmeans needs a non-empty 2-D array of rows")
    if not 1 <= k <= data.shape[0]:
        raise StatsError(f"k must be in [1, {data.shape[0]}], got {k}")

    centroids, _ = kmeans_plusplus(data, n_clusters=k, random_state=seed)
    labels, inertia = _assign(data, centroids)
    history = [inertia]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        updated = centroids.copy()
        for c in range(k):
            members = data[labels == c]
            if len(members):
                updated[c] = members.mean(axis=0)
        new_labels, new_inertia = _assign(data, updated)
        if new_inertia > inertia * (1 + 1e-12) + 1e-300:
            raise StatsError(f"k-means inertia increased at iteration {n_iter}: {inertia} -> {new_inertia}")
        centroids, inertia = updated, new_inertia
        history.append(inertia)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    else:
        logger.warning("k-means did not converge in %d iterations", max_iter)

    return KMeansResult(labels=labels.tolist(), inertia=inertia, centroids=centroids.tolist(),
                        n_iter=n_iter, inertia_history=history, seed=seed)
