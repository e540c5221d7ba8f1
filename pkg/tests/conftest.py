import pytest

from clique_apsp.graph import gen_graph


@pytest.fixture
def er64():
    return gen_graph("erdos_renyi:64:0.1:w=1-20", 3)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
