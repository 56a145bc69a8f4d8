import math

import pytest
from hypothesis import HealthCheck, settings

from photontherm import params as P

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def record_criterion():
    def record(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def yb():
    return P.yb_556()


@pytest.fixture(scope="session")
def far_drive(yb):
    """Far-detuned operating point: Delta = -157 Gamma, Omega = 0.1 |Delta|."""
    return P.fig4_drive(0.1, yb)


@pytest.fixture(scope="session")
def far_T(yb, far_drive):
    return P.doppler_temperature(yb, far_drive)


@pytest.fixture(scope="session")
def make_mode(yb, far_drive):
    def make(offset_gamma=0.0, drive=None, theta=math.pi / 2, alpha=P.DEFAULT_ALPHA, kappa=0.0):
        d = far_drive if drive is None else drive
        return P.mode_at_offset(yb, d, offset_gamma * yb.Gamma, theta=theta, alpha_q=alpha * yb.Gamma,
                                kappa_q=kappa * yb.Gamma)
    return make
