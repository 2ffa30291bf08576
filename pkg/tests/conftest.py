import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def cardio_csv_path() -> Path | None:
    """The Kaggle cardiovascular CSV, if the user has provided it."""
    env = os.environ.get("DPSYNTH_CARDIO_CSV")
    candidates = [Path(env)] if env else []
    candidates += [
        Path(__file__).resolve().parent.parent / "data" / "cardio_train.csv",
        Path(__file__).resolve().parent.parent / "data" / "cardio.csv",
    ]
    for path in candidates:
        if path.is_file():
            return path
    return None


@pytest.fixture(scope="session")
def cardio_path():
    path = cardio_csv_path()
    if path is None:
        pytest.skip(
            "cardiovascular CSV not found: set DPSYNTH_CARDIO_CSV or place "
            "cardio_train.csv under data/ (see README)"
        )
    return path
