import pytest

from repfeedback import ModelParams, value_iteration
from repfeedback.dynamics import SimSettings, simulate_paths


@pytest.fixture(scope="session")
def baseline():
    return value_iteration(ModelParams())


@pytest.fixture(scope="session")
def paths_h(baseline):
    return simulate_paths(baseline, SimSettings(horizon=40, replications=64, seed=3, true_type="H"))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
