import numpy as np
import pytest

from trapchsh.spectrum import TrapConfig

# Acceptance lines collected by tests/test_acceptance.py: (label, passed, detail).
ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def cfg_g10():
    return TrapConfig(10.0, 0.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda t: int(t[0][2:])):
        terminalreporter.write_line(f"{label} {'PASS' if ok else 'FAIL'}: {detail}")
