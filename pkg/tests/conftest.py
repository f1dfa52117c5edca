import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from segrange import Runtime

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "segrange",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("segrange")


@pytest.fixture(scope="session")
def rt_pool():
    """Shared runtimes keyed by locale count, closed at session end."""
    pool = {}

    def get(locales: int) -> Runtime:
        if locales not in pool:
            pool[locales] = Runtime(locales)
        return pool[locales]

    yield get
    for rt in pool.values():
        rt.close()


@pytest.fixture
def rt4(rt_pool):
    return rt_pool(4)


@pytest.fixture
def rt3(rt_pool):
    return rt_pool(3)
