import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from boundcount2d.potential import Grid2D, SampledField, corpus

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def bench():
    return corpus()


@pytest.fixture
def small_grid():
    return Grid2D(2.0, 12)


def random_field(grid, seed, density=0.6):
    rng = np.random.default_rng(seed)
    vals = rng.random(grid.n * grid.n) * (rng.random(grid.n * grid.n) < density)
    return SampledField(grid, vals)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
