import numpy as np
import pytest

from database import DatabaseConnection
from models import ReportStore
from samplers import RngStream


def assert_within_se(samples, target: float, n_se: float = 4.0, bias: float = 0.0):
    """Sample mean within n_se standard errors (plus an absolute bias allowance) of target."""
    arr = np.asarray(samples, dtype=float)
    se = arr.std(ddof=1) / np.sqrt(arr.size)
    assert abs(arr.mean() - target) <= n_se * se + bias, f"mean {arr.mean():.6g} vs {target:.6g} (se {se:.2e})"


@pytest.fixture
def rng():
    return RngStream(20240601).generator()


@pytest.fixture
def store(tmp_path):
    return ReportStore(DatabaseConnection(tmp_path / "runs.db"))
