import pytest

from lpadlearn.logic import MegaExample
from lpadlearn.parsing import parse_atom, parse_theory

STROMBOLI = """\
eruption:0.6 ; earthquake:0.3 :- sudden_energy_release, fault_rupture(X).
sudden_energy_release:0.7.
fault_rupture(southwest_northeast).
fault_rupture(east_west).
"""


@pytest.fixture
def stromboli():
    return parse_theory(STROMBOLI)


@pytest.fixture
def empty_world():
    return MegaExample("w")


@pytest.fixture
def eruption():
    return parse_atom("eruption")


ACCEPTANCE_RESULTS = {}


def record_acceptance(number, passed, detail):
    """Store a criterion outcome for the end-of-run summary."""
    ACCEPTANCE_RESULTS[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'} - {detail}")
