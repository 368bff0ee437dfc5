from __future__ import annotations

import pytest

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """record(number, title, passed, detail) -> stores one summary line per acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        tag = "PASS" if passed else "FAIL"
        line = f"[{tag}] criterion {number:>2}: {title} | {detail}"
        _CRITERIA[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[n])
