import random

import pytest

from homeplan import benchmark
from homeplan.cli import bundled
from homeplan.schema import schema_registry
from homeplan.world import load_scenario


@pytest.fixture(scope="session")
def registry():
    return schema_registry()


@pytest.fixture
def house():
    """Fresh (world, robot) pair from the bundled house fixture."""
    return load_scenario(bundled("house.json"))


@pytest.fixture(scope="session")
def fixture_records():
    return benchmark.load_dataset(bundled("bench_fixture.jsonl"))


@pytest.fixture(scope="session")
def shot_records():
    return benchmark.load_dataset(bundled("shots.jsonl"))


@pytest.fixture
def rng():
    return random.Random(12345)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in module.RESULTS:
            terminalreporter.write_line(line)
