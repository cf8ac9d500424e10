from itertools import combinations

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.stats import norm

from src.errors import StatsError
from src.stats import (
    Density,
    intrinsic_discrepancy,
    kde,
    kl_divergence,
    kmeans,
    kruskal_wallis,
    pairwise_intrinsic_discrepancy,
    pairwise_wilcoxon_bonferroni,
    silverman_bandwidth,
    wilcoxon_rank_sum,
)


def gaussian(mu: float, grid: np.ndarray) -> Density:
    values = np.exp(-0.5 * (grid - mu) ** 2) / np.sqrt(2 * np.pi)
    return Density(grid=grid, values=values / trapezoid(values, grid), bandwidth=1.0)


# Densities

def test_kde_integrates_to_one(rng):
    density = kde(rng.normal(size=200), label="a")
    assert trapezoid(density.values, density.grid) == pytest.approx(1.0, abs=1e-6)
    assert density.grid.size == 512
    assert density.label == "a"
    assert list(density.to_frame().columns) == ["x", "density"]


def test_kde_of_symmetric_pair_is_symmetric():
    density = kde([-1.0, 1.0])
    assert np.allclose(density.grid, -density.grid[::-1])
    assert np.max(np.abs(density.values - density.values[::-1])) < 1e-9


def test_kde_tracks_standard_normal_density():
    data = np.random.default_rng(0).normal(size=100_000)
    density = kde(data)
    # pointwise sd near the mode is sqrt(f R(K) / (n h)) ~ 0.0035 and the bias h^2 f'' / 2 ~ 0.002
    assert np.max(np.abs(density.values - norm.pdf(density.grid))) < 0.02
    assert np.max(density.values) == pytest.approx(norm.pdf(0.0), abs=0.02)
    # the mode itself is flat: about +-0.12 across seeds at this bandwidth
    assert abs(density.grid[np.argmax(density.values)]) < 0.25


def test_kde_explicit_bandwidth(rng):
    assert kde(rng.normal(size=50), bandwidth=0.3).bandwidth == 0.3
    with pytest.raises(StatsError):
        kde(rng.normal(size=50), bandwidth=-1.0)


@pytest.mark.parametrize("values", [[1.0], [2.0, 2.0, 2.0], [0.0, np.inf, 1.0]])
def test_kde_rejects_unusable_samples(values):
    with pytest.raises(StatsError):
        kde(values)


def test_silverman_falls_back_to_sd_when_iqr_is_zero():
    values = np.array([0.0] * 7 + [1.0])
    sd = float(np.std(values, ddof=1))
    assert silverman_bandwidth(values) == pytest.approx(0.9 * sd * 8 ** -0.2)


def test_density_rejects_unnormalised_values():
    grid = np.linspace(0, 1, 11)
    with pytest.raises(ValueError):
        Density(grid=grid, values=np.full(11, 2.0), bandwidth=1.0)


def test_kl_identity_and_unit_gaussians():
    grid = np.linspace(-10, 11, 4001)
    f, g = gaussian(0.0, grid), gaussian(1.0, grid)
    assert kl_divergence(f, f) == pytest.approx(0.0, abs=1e-9)
    assert kl_divergence(f, g) == pytest.approx(0.5, abs=0.02)


def test_intrinsic_discrepancy_is_symmetric(rng):
    f = kde(rng.normal(size=100))
    g = kde(rng.normal(1.0, 2.0, size=150))
    assert intrinsic_discrepancy(f, g) == intrinsic_discrepancy(g, f)
    assert intrinsic_discrepancy(f, g) == min(kl_divergence(f, g), kl_divergence(g, f))
    assert intrinsic_discrepancy(f, f) == 0.0


def test_pairwise_intrinsic_discrepancy_matrix(rng):
    densities = {name: kde(rng.normal(mu, size=80)) for name, mu in (("A", 0.0), ("B", 1.0), ("C", 3.0))}
    matrix = pairwise_intrinsic_discrepancy(densities)
    assert list(matrix.index) == ["A", "B", "C"]
    assert np.allclose(np.diag(matrix.values), 0.0)
    assert np.array_equal(matrix.values, matrix.values.T)
    assert matrix.loc["A", "C"] > matrix.loc["A", "B"]


# Rank tests

def enumerated_p(x, y) -> float:
    pooled = np.concatenate([x, y])
    n1, n2 = len(x), len(y)
    u = sum(float(a > b) for a in x for b in y)
    extreme = max(u, n1 * n2 - u)
    hits = total = 0
    for idx in combinations(range(n1 + n2), n1):
        xs = pooled[list(idx)]
        ys = np.delete(pooled, list(idx))
        hits += sum(float(a > b) for a in xs for b in ys) >= extreme
        total += 1
    return min(1.0, 2 * hits / total)


@pytest.mark.parametrize("seed", range(20))
def test_exact_wilcoxon_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=int(rng.integers(1, 6)))
    y = rng.normal(0.8, size=int(rng.integers(1, 6)))
    report = wilcoxon_rank_sum(x, y)
    assert report.exact
    assert report.statistic == sum(float(a > b) for a in x for b in y)
    assert report.p_value == pytest.approx(enumerated_p(x, y), abs=1e-12)


def test_wilcoxon_separated_samples():
    report = wilcoxon_rank_sum([1, 2, 3, 4, 5], [6, 7, 8, 9, 10])
    assert report.statistic == 0.0
    assert report.p_value == pytest.approx(2 / 252)


def test_wilcoxon_ties_use_normal_approximation():
    report = wilcoxon_rank_sum([1, 2, 2, 3], [2, 3, 3, 4])
    assert not report.exact
    assert 0 < report.p_value <= 1


def test_wilcoxon_all_tied_and_empty():
    report = wilcoxon_rank_sum([5, 5, 5], [5, 5])
    assert report.p_value == 1.0
    assert report.statistic == 3.0
    with pytest.raises(StatsError):
        wilcoxon_rank_sum([], [1.0])


@pytest.mark.parametrize("seed", range(10))
def test_wilcoxon_invariant_under_monotone_transform(seed):
    rng = np.random.default_rng(seed)
    # 8 + 8 runs the exact path, 30 + 25 the normal approximation
    for nx, ny in ((8, 8), (30, 25)):
        x, y = rng.normal(size=nx), rng.normal(0.5, size=ny)
        plain = wilcoxon_rank_sum(x, y, exact_threshold=16)
        for transform in (np.exp, lambda v: v ** 3 + 2 * v):
            moved = wilcoxon_rank_sum(transform(x), transform(y), exact_threshold=16)
            assert moved.p_value == plain.p_value
            assert moved.statistic == plain.statistic
            assert moved.exact == plain.exact
        # decreasing: U flips to nx * ny - U, the two-sided p stays
        flipped = wilcoxon_rank_sum(7.0 - 0.5 * x, 7.0 - 0.5 * y, exact_threshold=16)
        assert flipped.statistic == nx * ny - plain.statistic
        assert flipped.p_value == pytest.approx(plain.p_value, rel=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_kruskal_wallis_invariant_under_relabeling(seed):
    rng = np.random.default_rng(seed)
    samples = [rng.normal(shift, size=int(rng.integers(3, 12))) for shift in (0.0, 0.4, 1.0)]
    base = kruskal_wallis({"a": samples[0], "b": samples[1], "c": samples[2]})
    relabeled = kruskal_wallis({"z": samples[2], "x": samples[0], "y": samples[1]})
    assert relabeled.statistic == pytest.approx(base.statistic, rel=1e-12)
    assert relabeled.p_value == pytest.approx(base.p_value, rel=1e-12)
    assert kruskal_wallis({"q": samples[0], "r": samples[1], "s": samples[2]}).statistic == base.statistic


def brute_force_h(samples) -> float:
    pooled = np.concatenate(samples)
    n = pooled.size
    ranks = np.array([1 + np.sum(pooled < v) + (np.sum(pooled == v) - 1) / 2 for v in pooled])
    h, start = 0.0, 0
    for s in samples:
        h += ranks[start:start + s.size].sum() ** 2 / s.size
        start += s.size
    return 12.0 / (n * (n + 1)) * h - 3 * (n + 1)


@pytest.mark.parametrize("seed", range(50))
def test_kruskal_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    samples = [rng.normal(i * 0.3, size=int(rng.integers(2, 8))) for i in range(int(rng.integers(2, 5)))]
    report = kruskal_wallis(samples)
    assert report.statistic == pytest.approx(brute_force_h(samples), abs=1e-9)
    assert report.labels == [f"group{i + 1}" for i in range(len(samples))]


def test_kruskal_identical_values_and_single_group():
    report = kruskal_wallis({"a": [1, 1, 1], "b": [1, 1]})
    assert (report.statistic, report.p_value) == (0.0, 1.0)
    with pytest.raises(StatsError):
        kruskal_wallis({"a": [1, 2, 3]})


def test_pairwise_bonferroni():
    groups = {"A": [1, 2, 3, 4], "B": [5, 6, 7, 8], "C": [1.5, 2.5, 3.5, 4.5]}
    report = pairwise_wilcoxon_bonferroni(groups)
    assert report.labels == ["A", "B", "C"]
    assert report.n_pairs == 3
    raw, adjusted = np.array(report.raw), np.array(report.adjusted)
    assert np.array_equal(raw, raw.T)
    assert np.all(np.diag(adjusted) == 1.0)
    assert np.allclose(adjusted, np.minimum(3 * raw, 1.0) * ~np.eye(3, dtype=bool) + np.eye(3))
    assert raw[0, 1] == pytest.approx(2 / 70)


# k-means

def test_kmeans_separates_blobs(rng):
    rows = np.vstack([rng.normal(0, 0.1, size=(20, 2)), rng.normal(5, 0.1, size=(20, 2))])
    result = kmeans(rows, 2, seed=3)
    labels = np.array(result.labels)
    assert len(set(labels[:20])) == 1
    assert len(set(labels[20:])) == 1
    assert labels[0] != labels[-1]
    history = result.inertia_history
    assert all(b <= a for a, b in zip(history, history[1:]))
    assert kmeans(rows, 2, seed=3) == result


def test_kmeans_single_cluster_centroid_is_mean(rng):
    rows = rng.normal(size=(30, 3))
    result = kmeans(rows, 1)
    assert np.allclose(result.centroids[0], rows.mean(axis=0))
    assert result.labels == [0] * 30


@pytest.mark.parametrize("k", [0, 11])
def test_kmeans_rejects_bad_k(k):
    with pytest.raises(StatsError):
        kmeans(np.arange(10.0), k)
