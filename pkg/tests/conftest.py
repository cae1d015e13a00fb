import json
import pathlib

import pytest
from hypothesis import HealthCheck, settings

from hardwall.model import ModelParams, ObservableGrid

DATA = pathlib.Path(__file__).parent / "data"

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def gamma_oracle():
    return json.loads((DATA / "gamma_oracle.json").read_text())


@pytest.fixture(scope="session")
def model_oracle():
    return json.loads((DATA / "model_oracle.json").read_text())


@pytest.fixture
def reference():
    """Reference configuration used throughout the convergence checks."""
    return ModelParams(1.0, 0.0, 0.6, 0.8), ObservableGrid(1, (1.0, 1.0), (0.5, -0.3))


_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the terminal summary lists them in order."""
    store = request.config.stash[_CRITERIA]

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        store[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_CRITERIA, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for number in sorted(store):
            terminalreporter.write_line(store[number])
