"""Shared fixtures: a verdict recorder for the acceptance suite.

Acceptance tests register a one-line verdict before asserting, so the
summary at the end of a run lists every headline capability with its
measured error and runtime even when some of them fail.
"""

import pytest

_verdicts: list[str] = []


@pytest.fixture
def acceptance():
    def record(name: str, passed: bool, detail: str) -> None:
        _verdicts.append(f"{name}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance")
        for line in _verdicts:
            terminalreporter.write_line(line)
