import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qtick import qla

settings.register_profile("qtick", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qtick")

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

finite = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)


@st.composite
def axes(draw):
    v = np.array([draw(finite), draw(finite), draw(finite)])
    n = float(np.linalg.norm(v))
    if n < 1e-3:
        return qla.Z_AXIS
    return qla.AxisVector(*(v / n))


angles = st.floats(min_value=-2 * math.pi, max_value=2 * math.pi, allow_nan=False)
seeds = st.integers(min_value=0, max_value=2**63 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixtures_dir():
    return FIXTURES
