import numpy as np
import pytest

from conftest import make_group
from src.config import Settings
from src.models import GroupEmbeddingParams
from src.pipeline import PIPELINE_STAGES, run_cgs_study

PARAMS = GroupEmbeddingParams(m=3, lag=31)


@pytest.fixture(scope="module")
def groups(lorenz):
    x = lorenz.series.samples
    segments = [x[i * 1500:(i + 1) * 1500] for i in range(4)]
    return [make_group("A", segments[:2]), make_group("B", [2.0 * s for s in segments[2:]])]


def small_settings() -> Settings:
    settings = Settings()
    settings.geometry.grid_size = 12
    return settings


def test_study_emits_every_stage(groups):
    events = []
    study = run_cgs_study(groups, "auto", settings=small_settings(), status_callback=events.append,
                          params={"A": PARAMS, "B": PARAMS})
    assert [e["stage_key"] for e in events[::2]] == [s["key"] for s in PIPELINE_STAGES]
    assert [e["status"] for e in events[:2]] == ["started", "completed"]
    assert events[-1]["progress"] == 100
    assert study["alpha"] == max(study["optimal_alphas"].values())
    assert np.isfinite(study["alpha"])
    assert [r.group for r in study["pooled"]] == ["A", "B"]
    assert len(study["per_series"]) == 4


def test_fixed_alpha_and_pooled_mode(groups):
    study = run_cgs_study(groups, 3.0, settings=small_settings(), mode="pooled",
                          params={"A": PARAMS, "B": PARAMS})
    assert study["optimal_alphas"] == {}
    assert study["alpha"] == 3.0
    assert study["per_series"] == []
    assert all(r.alpha == 3.0 for r in study["pooled"])


def test_failing_status_callback_does_not_stop_the_study(groups):
    def broken(payload):
        raise RuntimeError("display gone")

    study = run_cgs_study(groups[:1], np.inf, settings=small_settings(), mode="pooled",
                          status_callback=broken, params={"A": PARAMS})
    assert study["pooled"][0].volume == study["pooled"][0].hull_volume


def test_trim_quantile_applies_per_group(groups):
    settings = small_settings()
    settings.cgs.trim_quantile = 0.5
    study = run_cgs_study(groups, 5.0, settings=settings, mode="per-series",
                          params={"A": PARAMS, "B": PARAMS})
    assert len(study["per_series"]) == 2
