"""
Synthetic test systems: the Lorenz attractor integrated with fixed-step RK4,
and a random sample of the paraboloid z = x^2 + y^2.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.errors import EstimationError
from src.ingest import TimeSeries

logger = logging.getLogger(__name__)


class SimulationError(EstimationError):
    """Integration produced a non-finite state."""

    def __init__(self, message: str, step: int):
        self.step = step
        super().__init__(message)


class LorenzParams(BaseModel):
    s: float = 10.0
    r: float = 28.0
    b: float = 8.0 / 3.0
    x0: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    dt: float = Field(0.005, gt=0)
    t_end: float = 75.0
    transient: float = Field(10.0, ge=0)  # seconds integrated and discarded before recording

    @field_validator("x0")
    @classmethod
    def _finite(cls, value):
        if not all(math.isfinite(v) for v in value):
            raise ValueError("x0 must be finite")
        return value

    @model_validator(mode="after")
    def _span(self) -> "LorenzParams":
        if self.t_end <= self.dt:
            raise ValueError("t_end must exceed dt")
        return self

    @property
    def n_states(self) -> int:
        return int(round(self.t_end / self.dt)) + 1


class LorenzTrajectory(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    params: LorenzParams
    t: np.ndarray
    states: np.ndarray  # (n, 3): x, y, z

    @property
    def series(self) -> TimeSeries:
        """x component as a sampled series."""
        return TimeSeries(samples=self.states[:, 0], dt=self.params.dt, label="lorenz_x")


def lorenz_rhs(state: np.ndarray, s: float, r: float, b: float) -> np.ndarray:
    x, y, z = state
    return np.array([s * (y - x), r * x - y - x * z, x * y - b * z])


def lorenz_equilibria(params: LorenzParams) -> np.ndarray:
    """Origin plus, for r > 1, the two symmetric fixed points."""
    points = [(0.0, 0.0, 0.0)]
    if params.r > 1:
        c = math.sqrt(params.b * (params.r - 1))
        points += [(c, c, params.r - 1), (-c, -c, params.r - 1)]
    return np.array(points)


def _rk4_step(state: np.ndarray, dt: float, s: float, r: float, b: float) -> np.ndarray:
    k1 = lorenz_rhs(state, s, r, b)
    k2 = lorenz_rhs(state + 0.5 * dt * k1, s, r, b)
    k3 = lorenz_rhs(state + 0.5 * dt * k2, s, r, b)
    k4 = lorenz_rhs(state + dt * k3, s, r, b)
    return state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def lorenz_trajectory(params: Optional[LorenzParams] = None) -> LorenzTrajectory:
    """
    Classic RK4 at fixed step. The transient is integrated first and
    dropped; t = 0 is the first recorded state.
    """
    params = params or LorenzParams()
    state = np.array(params.x0, dtype=np.float64)
    skip = int(round(params.transient / params.dt))
    n = params.n_states
    states = np.empty((n, 3))

    for step in range(skip + n):
        if step >= skip:
            states[step - skip] = state
        if step == skip + n - 1:
            break
        state = _rk4_step(state, params.dt, params.s, params.r, params.b)
        if not np.all(np.isfinite(state)):
            raise SimulationError(f"Lorenz integration diverged at step {step + 1}", step + 1)

    logger.debug("Integrated %d Lorenz steps (%d discarded)", skip + n - 1, skip)
    return LorenzTrajectory(params=params, t=np.arange(n) * params.dt, states=states)


def trajectory_to_frame(trajectory: LorenzTrajectory) -> pd.DataFrame:
    return pd.DataFrame({
        "t": trajectory.t,
        "x": trajectory.states[:, 0],
        "y": trajectory.states[:, 1],
        "z": trajectory.states[:, 2],
    })


def paraboloid_sample(n: int, seed: int = 0) -> np.ndarray:
    """n points with x, y uniform on [-1, 1] (PCG64 seeded) and z = x^2 + y^2."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    xy = rng.uniform(-1.0, 1.0, size=(n, 2))
    z = xy[:, 0] * xy[:, 0] + xy[:, 1] * xy[:, 1]
    return np.column_stack([xy, z])
