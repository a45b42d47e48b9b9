import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import RAMP7  # noqa: E402


@pytest.fixture
def ramp7():
    return np.array(RAMP7)


@pytest.fixture
def separated_clusters():
    """Two tight, well-separated groups of 16-d feature rows."""
    rng = np.random.default_rng(7)
    a = rng.normal(0.0, 0.05, size=(6, 16))
    b = rng.normal(3.0, 0.05, size=(4, 16))
    return np.vstack([a, b]), np.array([0] * 6 + [1] * 4)
