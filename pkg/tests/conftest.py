from __future__ import annotations

import io
from datetime import date

import pytest

from forecastaudit.ingest import parse_truth

ACCEPTANCE_LINES: list[str] = []


def d(text: str) -> date:
    return date.fromisoformat(text)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.fixture
def truth_csv():
    def make(rows, fmt="daily"):
        text = "location,date,count\n" + "".join(f"{l},{t},{c}\n" for l, t, c in rows)
        return parse_truth(io.BytesIO(text.encode()), fmt)
    return make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
