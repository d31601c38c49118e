import pytest

from instances import ACCEPTANCE_RESULTS, fixture


@pytest.fixture(scope="session")
def frisbee():
    return fixture("frisbee")


@pytest.fixture(scope="session")
def horse():
    return fixture("horse")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
