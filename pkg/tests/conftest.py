import functools

import pytest

from soecredit.calibration import Calibration, scenario
from soecredit.model import build_system
from soecredit.solver import solve


@functools.lru_cache(maxsize=None)
def solved(name: str = "baseline_friction", policy: str = "fi"):
    cal = scenario(name).apply(Calibration())
    return solve(build_system(cal, policy))


@pytest.fixture(scope="session")
def baseline():
    return solved("baseline_friction", "fi")
