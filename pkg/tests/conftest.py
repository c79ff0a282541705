import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_symmetric(rng, p, scale=1.0):
    A = rng.standard_normal((p, p)) * scale
    return (A + A.T) / 2


def random_spd(rng, p):
    A = rng.standard_normal((p, p))
    return A @ A.T + p * np.eye(p)


@st.composite
def symmetric_matrices(draw, min_dim=1, max_dim=6):
    p = draw(st.integers(min_dim, max_dim))
    A = draw(hnp.arrays(np.float64, (p, p),
                        elements=st.floats(-100, 100, allow_nan=False, allow_infinity=False)))
    return (A + A.T) / 2
