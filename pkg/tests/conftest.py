import os
import sys

# Allow `src...` imports when pytest is run from anywhere
sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

import numpy as np
import pytest

from src.dynsys import lorenz_trajectory
from src.ingest import SeriesGroup, TimeSeries

CUBE = np.array([[x, y, z] for x in (0.0, 1.0) for y in (0.0, 1.0) for z in (0.0, 1.0)])
UNIT_TETRA = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def ball_sample(n: int, seed: int) -> np.ndarray:
    """Uniform points in the unit ball."""
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=(n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.uniform(size=n) ** (1.0 / 3.0)
    return direction * radius[:, None]


def noisy_sine(n: int, period: float, seed: int, noise: float = 0.05) -> np.ndarray:
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    return np.sin(2 * np.pi * t / period) + noise * rng.normal(size=n)


def make_group(name: str, arrays, fs: float = 100.0) -> SeriesGroup:
    members = tuple(
        TimeSeries.from_samples(a, fs, label=f"{name}{i:03d}", group=name) for i, a in enumerate(arrays)
    )
    return SeriesGroup(name=name, members=members)


def write_ascii(path, values) -> None:
    path.write_text("".join(f"{float(v)!r}\n" for v in values), encoding="utf-8")


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch, tmp_path):
    for var in ("CGS_N_JOBS", "CGS_CONFIG", "CGS_LOG_LEVEL"):
        monkeypatch.delenv(var, raising=False)
    monkeypatch.setenv("CGS_LOG_DIR", str(tmp_path / "logs"))


@pytest.fixture(scope="session")
def lorenz():
    return lorenz_trajectory()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def sine_group():
    return make_group("sine", [noisy_sine(600, 40.0, seed) for seed in range(3)])
