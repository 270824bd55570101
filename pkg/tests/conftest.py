import sys
import warnings
from pathlib import Path

import pytest

from nanopa.mesh import cached_disc_mesh
from nanopa.model import load_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


@pytest.fixture(scope="session")
def scenario_dir() -> Path:
    return SCENARIOS


@pytest.fixture(scope="session")
def mesh256():
    return cached_disc_mesh(256)


@pytest.fixture(scope="session")
def mesh512():
    return cached_disc_mesh(512)


@pytest.fixture(scope="session")
def one_particle():
    return load_scenario(SCENARIOS / "one_particle.toml")


@pytest.fixture(scope="session")
def dimer():
    return load_scenario(SCENARIOS / "dimer.toml")


@pytest.fixture(scope="session")
def localization_scenario():
    return load_scenario(SCENARIOS / "localization.toml")


@pytest.fixture(autouse=True)
def _quiet_numerics():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance")
    verdicts = getattr(module, "VERDICTS", {})
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for n in sorted(verdicts):
            terminalreporter.write_line(verdicts[n])
