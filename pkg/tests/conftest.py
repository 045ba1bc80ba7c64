import numpy as np
import pytest

from deh_sim.models import QubitParams
from deh_sim.utils import phase_grid


@pytest.fixture
def resonant():
    """E = ω = 1, A = 0.05, φ = 0."""
    return QubitParams(gap=1.0, amp=0.05, omega=1.0, phase=0.0)


@pytest.fixture
def phases64():
    return phase_grid(64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
