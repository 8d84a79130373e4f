import numpy as np
import pytest

from apcw.mech import BeamSpec, Family, make_mode, sine_shape

L_BEAM = 107e-6
M_EFF = 16.3e-15
F_1 = 2.3844e6


@pytest.fixture
def beam():
    return BeamSpec.uniform(L_BEAM, 280e-9, 200e-9, 250e9, 3180.0, 800e6)


@pytest.fixture
def ref_mode():
    x, u = sine_shape(1, L_BEAM)
    return make_mode(1, F_1, M_EFF, Q=1e5, temperature=300.0, family=Family.Y_A, x=x, shape=u)


def sine_mode(p, f, m_eff=M_EFF, Q=1e5, T=300.0, family=Family.Y_A, length=L_BEAM):
    x, u = sine_shape(p, length)
    return make_mode(p, f, m_eff, Q=Q, temperature=T, family=family, x=x, shape=u)


def tone(f, fs, n, amp=1.0, phase=0.0):
    t = np.arange(n) / fs
    return amp * np.cos(2 * np.pi * f * t + phase)


# one summary line per acceptance criterion, printed at the end of the run
ACCEPTANCE = []


def record_criterion(number, ok, detail):
    ACCEPTANCE.append((number, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
