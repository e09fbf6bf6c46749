import json
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

TESTS = Path(__file__).parent
sys.path.insert(0, str(TESTS))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def frozen():
    return json.loads((TESTS / "data" / "oracle_values.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def benchmark_run():
    from sparsetrack import tvarx

    scenario = tvarx.benchmark_scenario(seed=0)
    return scenario, tvarx.simulate(scenario)


ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption("--bench", action="store_true", default=False,
                     help="run the wall-clock performance criterion")


def record_criterion(number, title, passed, detail):
    line = f"[criterion {number}] {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
