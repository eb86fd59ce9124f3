import math

import pytest

from nlslab.oscillator import OscillatingCoefficient

C0 = 73.55418773631645
T0 = 3 * math.pi / 400
TW = math.pi / 400

# criterion lines collected by the acceptance module, echoed after the run
ACCEPTANCE_LINES = []


@pytest.fixture
def coeff():
    return OscillatingCoefficient("cos2", 100.0, C0)


@pytest.fixture
def window():
    return T0, TW


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":").rstrip("abcd"))):
            terminalreporter.write_line(line)
