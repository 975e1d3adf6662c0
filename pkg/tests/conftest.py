from pathlib import Path

import pytest

from mdir.io import read_csv
from mdir.survcore import ingest

DATA = Path(__file__).parent / "data"
GTSG_CSV = DATA / "gtsg.csv"

_criteria: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def gtsg():
    return read_csv(GTSG_CSV)


@pytest.fixture
def four_subjects():
    # group A: events at 1 and 3; group B: event at 2, censored at 4
    return ingest([(1.0, 1, "A"), (3.0, 1, "A"), (2.0, 1, "B"), (4.0, 0, "B")])


@pytest.fixture(scope="session")
def criterion():
    """Record an acceptance criterion outcome for the terminal summary."""

    def record(name: str, passed: bool, detail: str = "") -> bool:
        prev = _criteria.get(name)
        if prev is not None:
            passed = passed and prev[0]
            detail = f"{prev[1]}; {detail}" if detail else prev[1]
        _criteria[name] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda s: int(s.split()[0]) if s.split()[0].isdigit() else 99):
        ok, detail = _criteria[name]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {name}: {detail}")
