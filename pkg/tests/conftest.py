"""Shared fixtures: the acceptance summary printed at the end of a run."""

import pytest

_LINES = []


@pytest.fixture
def criterion_report():
    """Record one pass/fail line per acceptance criterion.

    Lines are echoed immediately (visible with -s) and repeated in a
    terminal section after the run, past the capture machinery.
    """

    def record(number, name, passed, detail=""):
        mark = "PASS" if passed else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        line = f"criterion {number} [{mark}] {name}{suffix}"
        _LINES.append((number, line))
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_LINES):
            terminalreporter.write_line(line)
