"""Shared test plumbing: acceptance-criterion result lines.

Tests named test_criterion_<N>_* feed a per-criterion scoreboard; the
terminal summary prints one PASS/FAIL line per criterion so a run's
verdict is readable without scrolling the dots."""

import re

import pytest

_CRITERION = re.compile(r"test_criterion_(\d+)")

_outcomes: dict[int, list[str]] = {}
_notes: dict[int, list[str]] = {}


@pytest.fixture
def criterion_note():
    """Attach a measurement note to a criterion's summary line."""

    def note(number: int, text: str) -> None:
        _notes.setdefault(int(number), []).append(str(text))

    return note


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    number = int(match.group(1))
    if report.when == "call":
        _outcomes.setdefault(number, []).append(report.outcome)
    elif report.when == "setup" and report.outcome != "passed":
        _outcomes.setdefault(number, []).append(
            "failed" if report.outcome == "failed" else "skipped"
        )


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        outcomes = _outcomes[number]
        if any(o == "failed" for o in outcomes):
            status = "FAIL"
        elif all(o == "passed" for o in outcomes):
            status = "PASS"
        else:
            status = "SKIP"
        line = f"CRITERION {number}: {status}"
        notes = "; ".join(_notes.get(number, []))
        if notes:
            line += f" - {notes}"
        terminalreporter.write_line(line)
