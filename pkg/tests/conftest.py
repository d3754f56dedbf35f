import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src" / "backend"))

from models.survey import SurveyDataset  # noqa: E402

EXAMPLE_DIR = ROOT / "data" / "example"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance checks (R = 500 replications)")


@pytest.fixture(autouse=True)
def detach_cli_logging():
    """main() adds a stderr handler to the root logger; drop it so later tests do not write to a closed capture."""
    yield
    root = logging.getLogger()
    for handler in [h for h in root.handlers if getattr(h, "_toolkit_handler", False)]:
        root.removeHandler(handler)


def random_survey(rng: np.random.Generator, n_strata: int = 3, max_clusters: int = 4, max_size: int = 5) -> SurveyDataset:
    """Small stratified cluster sample with ragged clusters and uneven weights."""
    strata, clusters, weights = [], [], []
    for h in range(n_strata):
        for c in range(int(rng.integers(1, max_clusters + 1))):
            size = int(rng.integers(1, max_size + 1))
            strata += [f"h{h}"] * size
            clusters += [f"h{h}c{c}"] * size
            weights += list(rng.uniform(0.5, 5.0, size))
    n = len(strata)
    return SurveyDataset.from_arrays(
        strata=strata,
        clusters=clusters,
        weights=weights,
        covariates=pd.DataFrame({"x": rng.normal(size=n)}),
        ids=[f"o{i}" for i in range(n)],
    )


@pytest.fixture
def small_survey() -> SurveyDataset:
    """Two strata, five clusters, uneven weights."""
    return SurveyDataset.from_arrays(
        strata=["A"] * 5 + ["B"] * 5,
        clusters=["a1", "a1", "a2", "a2", "a3", "b1", "b1", "b1", "b2", "b2"],
        weights=[1.0, 1.5, 2.0, 2.0, 3.0, 1.0, 1.0, 2.5, 4.0, 0.5],
        covariates=pd.DataFrame({
            "age": [20.0, 25.0, 30.0, 35.0, 40.0, 22.0, 28.0, 33.0, 45.0, 19.0],
            "urban": [1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0],
            "segment": ["s1", "s2", "s1", "s2", "s1", "s2", "s1", "s2", "s1", "s2"],
        }),
        ids=[f"o{i}" for i in range(1, 11)],
    )


@pytest.fixture
def survey_factory():
    return random_survey
