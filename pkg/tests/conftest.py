from __future__ import annotations

import pytest

_CRITERIA: dict[tuple[int, str], str] = {}


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title}"
        if detail:
            line += f" ({detail})"
        _CRITERIA[(number, title)] = line
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for key in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[key])
