import math

import pytest

from ristrack.codebook import NearFieldFeed, degree_grid, generate_codebook
from ristrack.geometry import RisGeometry


@pytest.fixture(scope="session")
def geom():
    return RisGeometry()


@pytest.fixture(scope="session")
def case1_incident(geom):
    return NearFieldFeed(3 * geom.wavelength)


@pytest.fixture(scope="session")
def fig13_book(geom, case1_incident):
    return generate_codebook(geom, case1_incident, [math.pi / 2], degree_grid(-40, 40, 10))


@pytest.fixture(scope="session")
def fine_book(geom, case1_incident):
    return generate_codebook(geom, case1_incident, [math.pi / 2], degree_grid(-40, 40, 1))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report_line():
    """Record one acceptance result line; printed again in the terminal summary."""
    def emit(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
