import math

import pytest

from cbdbell.config import demo_config_path, load_run_config
from cbdbell.model import eprb_spec

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []

CHSH_SETTINGS = {"A1": 0.0, "A2": math.pi / 4, "B1": math.pi / 8, "B2": -math.pi / 8}


def record_acceptance(criterion: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.append((criterion, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}: {detail}")


@pytest.fixture
def spec():
    return eprb_spec()


@pytest.fixture(scope="session")
def demo_config():
    return load_run_config(demo_config_path("timedelay_demo"))


@pytest.fixture(scope="session")
def lhv_config():
    return load_run_config(demo_config_path("lhv_demo"))


@pytest.fixture(scope="session")
def demo_streams(demo_config):
    from cbdbell.simulator import simulate_run

    return {c.id: simulate_run(demo_config.model_for(c), (c.a, c.b)) for c in demo_config.contexts}
