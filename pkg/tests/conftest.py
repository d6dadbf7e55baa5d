import shutil
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[1]
SAMPLES = REPO / "samples"


@pytest.fixture(scope="session")
def samples_dir() -> Path:
    return SAMPLES


@pytest.fixture()
def pima_workdir(tmp_path: Path) -> Path:
    """Fresh directory holding copies of the sample script and data."""
    shutil.copy(SAMPLES / "pima.csv", tmp_path / "pima.csv")
    shutil.copy(SAMPLES / "pima.rvl", tmp_path / "pima.rvl")
    shutil.copy(SAMPLES / "pima_clean.rvl", tmp_path / "pima_clean.rvl")
    return tmp_path
