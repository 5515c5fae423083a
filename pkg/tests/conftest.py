"""Shared fixtures for the test suite.

The acceptance tests record one verdict line per criterion; the hook
below replays them after the run so they stay visible even though
pytest captures stdout.
"""

import pytest

_acceptance_lines = []


@pytest.fixture
def acceptance_log():
    def log(line: str):
        _acceptance_lines.append(line)

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
