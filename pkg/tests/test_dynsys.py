import numpy as np
import pytest

from src.dynsys import (
    LorenzParams,
    SimulationError,
    lorenz_equilibria,
    lorenz_rhs,
    lorenz_trajectory,
    paraboloid_sample,
    trajectory_to_frame,
)
from src.config.reference_values import LORENZ_REFERENCE
from src.errors import EstimationError


def test_default_trajectory_shape(lorenz):
    assert lorenz.states.shape == (15001, 3)
    assert lorenz.t[0] == 0.0
    assert lorenz.t[-1] == pytest.approx(75.0)
    series = lorenz.series
    assert len(series) == 15001
    assert series.dt == LORENZ_REFERENCE["dt"]
    assert series.label == "lorenz_x"
    assert np.array_equal(series.samples, lorenz.states[:, 0])


def test_trajectory_stays_on_the_attractor(lorenz):
    assert np.all(np.abs(lorenz.states[:, :2]) < 30)
    assert np.all((lorenz.states[:, 2] > 0) & (lorenz.states[:, 2] < 60))
    # both lobes are visited
    assert lorenz.states[:, 0].min() < -5 < 5 < lorenz.states[:, 0].max()


def test_equilibria_have_zero_vector_field():
    params = LorenzParams()
    points = lorenz_equilibria(params)
    assert points.shape == (3, 3)
    assert points[1] == pytest.approx([np.sqrt(72.0), np.sqrt(72.0), 27.0])
    for p in points:
        assert np.allclose(lorenz_rhs(p, params.s, params.r, params.b), 0.0, atol=1e-12)
    assert lorenz_equilibria(LorenzParams(r=0.5)).shape == (1, 3)


def test_trajectory_is_deterministic():
    params = LorenzParams(t_end=2.0)
    assert np.array_equal(lorenz_trajectory(params).states, lorenz_trajectory(params).states)


def test_rk4_fourth_order_convergence():
    def end_state(dt: float) -> np.ndarray:
        return lorenz_trajectory(LorenzParams(dt=dt, t_end=1.0, transient=0.0)).states[-1]

    # fourth-order regime needs dt <= 0.005 on this attractor
    reference = end_state(0.0005)
    coarse = np.linalg.norm(end_state(0.005) - reference)
    fine = np.linalg.norm(end_state(0.0025) - reference)
    assert 8 <= coarse / fine <= 32


def test_sensitive_dependence_on_initial_conditions():
    a = lorenz_trajectory(LorenzParams(transient=0.0))
    b = lorenz_trajectory(LorenzParams(transient=0.0, x0=(1.0 + 1e-9, 1.0, 1.0)))
    assert np.max(np.linalg.norm(a.states - b.states, axis=1)) > 1.0


def test_divergent_integration_reports_step():
    params = LorenzParams(dt=1.0, t_end=1000.0, transient=0.0)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(SimulationError) as info:
            lorenz_trajectory(params)
    assert info.value.step >= 1
    assert isinstance(info.value, EstimationError)


@pytest.mark.parametrize("kwargs", [{"dt": 0.0}, {"t_end": 0.001}, {"transient": -1.0},
                                    {"x0": (float("nan"), 1.0, 1.0)}])
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        LorenzParams(**kwargs)


def test_trajectory_frame_columns():
    frame = trajectory_to_frame(lorenz_trajectory(LorenzParams(t_end=0.1)))
    assert list(frame.columns) == ["t", "x", "y", "z"]
    assert len(frame) == 21


def test_paraboloid_sample():
    pts = paraboloid_sample(2500, seed=4)
    assert pts.shape == (2500, 3)
    assert np.array_equal(pts[:, 2], pts[:, 0] ** 2 + pts[:, 1] ** 2)
    assert np.all(np.abs(pts[:, :2]) <= 1.0)
    assert np.all((pts[:, 2] >= 0) & (pts[:, 2] <= 2))
    assert np.array_equal(pts, paraboloid_sample(2500, seed=4))
    assert not np.array_equal(pts, paraboloid_sample(2500, seed=5))


def test_paraboloid_single_point_and_bad_n():
    assert paraboloid_sample(1).shape == (1, 3)
    with pytest.raises(ValueError):
        paraboloid_sample(0)
