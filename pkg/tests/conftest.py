import math

import pytest

from zwmsim.spectral import CavityParams, CombIndexRange, FrequencyGrid


@pytest.fixture
def params():
    """gamma/dw = 0.01, dw*tau = 0.1, in units of the comb spacing."""
    return CavityParams(gamma=0.01, delta_omega=1.0, tau=0.1, omega_s=1000.0, omega_p=2200.0)


@pytest.fixture
def coarse_params():
    return CavityParams(gamma=0.05, delta_omega=1.0, tau=0.1, omega_s=1000.0, omega_p=2200.0)


@pytest.fixture
def three_modes():
    return CombIndexRange(-1, 1)


def window(p, lo, hi, points_per_fsr):
    return FrequencyGrid.comb_window(p, lo, hi, points_per_fsr)


def wrap(x):
    return math.remainder(x, 2 * math.pi)


ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    """Log one acceptance criterion outcome; printed in the terminal summary."""
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
