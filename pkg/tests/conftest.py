import pytest

from squeeze_sim.hilbert import FockBasis
from squeeze_sim.model import derive_effective, reference_params

# Lines appended by tests/test_acceptance.py, echoed in the terminal summary.
ACCEPTANCE_LINES = []


@pytest.fixture
def params():
    return reference_params()


@pytest.fixture
def eff(params):
    return derive_effective(params)


@pytest.fixture
def basis():
    return FockBasis(63)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
