import random

import pytest

from pwmelnikov.systems import BT, LV


@pytest.fixture(params=[LV, BT], ids=["LV", "BT"])
def system(request):
    return request.param


@pytest.fixture
def rng():
    return random.Random(20240611)


def interior_energies(sys, count=10, guard=0.05):
    return [float(h) for h in sys.sample_energies(count, guard)]


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[tuple[int, str]] = []


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
