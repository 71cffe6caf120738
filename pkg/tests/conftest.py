import pytest

from femtolearn.topology import GeometryParams, generate_topology

from helpers import small_game


@pytest.fixture
def default_scenario():
    return generate_topology(GeometryParams(seed=0))


@pytest.fixture
def random_gain_scenario():
    return small_game()


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
