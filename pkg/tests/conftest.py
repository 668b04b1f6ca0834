import math
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from holelock.atomic import OpticalParams, ThreeLevelRFEraser
from holelock.pdh import LockSystem

settings.register_profile("holelock", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("holelock")

TWO_PI = 2 * math.pi


def sinh_grid(half_width: float, n: int, scale: float) -> np.ndarray:
    """Grid dense near zero and sparse in the wings, symmetric about zero."""
    u = np.linspace(-1.0, 1.0, n)
    return scale * np.sinh(u * np.arcsinh(half_width / scale))


@pytest.fixture(scope="session")
def ref_optical():
    return OpticalParams(T1=150e-6, T2_0=18e-6, alpha0L=1.0)


@pytest.fixture(scope="session")
def ref_levels():
    return ThreeLevelRFEraser(T_rg=4e-3, b_er=0.5, b_eg=0.5)


@pytest.fixture(scope="session")
def ref_system(ref_optical, ref_levels):
    """Reference lock: 1 kHz Rabi frequency, 0.23 mW, RF-eraser hole lifetime 4 ms."""
    return LockSystem.with_rabi(ref_optical, ref_levels, TWO_PI * 1e3, P_in=0.23e-3)


@pytest.fixture(scope="session")
def ref_trio(ref_system):
    return ref_system.trio(0.4)


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance report collected by tests/test_acceptance.py."""
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and getattr(mod, "REPORT", None):
            terminalreporter.section("acceptance criteria")
            for line in sorted(mod.REPORT):
                terminalreporter.write_line(line)
