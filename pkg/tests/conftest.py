import numpy as np
import pytest

from sceneswap.scheduler import make_schedule


@pytest.fixture(scope="session")
def sched():
    return make_schedule()


@pytest.fixture
def rng():
    return np.random.default_rng(42)
