import numpy as np
import pytest

from carlton.scenario import Network, Scenario, ScenarioParams, elect_manager

ACCEPTANCE_LINES: list[str] = []


def make_scenario(*user_clouds, centers=None):
    """Scenario from explicit per-network user coordinates."""
    nets = tuple(Network(tuple(map(tuple, users)), elect_manager(users)) for users in user_clouds)
    if centers is None:
        centers = tuple(tuple(np.mean(np.asarray(u, float), axis=0)) for u in user_clouds)
    return Scenario(nets, tuple(centers), ScenarioParams())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
