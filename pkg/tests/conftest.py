import logging

import pytest
from hypothesis import settings

from asyncheat import core

ACCEPTANCE_LINES: list[str] = []

# first calls into compiled kernels pay JIT time
settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture(autouse=True, scope="session")
def _check_finite():
    # test builds run with post-step finiteness checks on
    previous = core.CHECK_FINITE
    core.CHECK_FINITE = True
    logging.getLogger("asyncheat.executor").setLevel(logging.ERROR)
    yield
    core.CHECK_FINITE = previous


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
