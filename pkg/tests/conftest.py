import pytest

from pushclutter import generate_random_scene

import _util


@pytest.fixture(scope="session")
def shelf_scene():
    """A 10-object cluttered shelf."""
    return generate_random_scene(1, 10)


@pytest.fixture(scope="session")
def sparse_scene():
    """A 2-object shelf with plenty of free space."""
    return generate_random_scene(7, 2)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _util.ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _util.ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
