import math

import numpy as np
import pytest
from scipy.special import genlaguerre

from rydberg_hcp.basis import build_basis, build_grid
from rydberg_hcp.constants import Q_NOMINAL, fs_to_au
from rydberg_hcp.dynamics import HcpPulse, Propagator, dipole_matrix
from rydberg_hcp.kick import kick_matrix

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def hydrogen_R(n, l, r):
    """Analytic hydrogen radial function (oracle)."""
    rho = 2.0 * r / n
    c = math.sqrt((2.0 / n) ** 3 * math.factorial(n - l - 1) / (2 * n * math.factorial(n + l)))
    return c * np.exp(-rho / 2) * rho**l * genlaguerre(n - l - 1, 2 * l + 1)(rho)


@pytest.fixture(scope="session")
def basis187():
    return build_basis()


@pytest.fixture(scope="session")
def kick187(basis187):
    return kick_matrix(basis187, Q_NOMINAL)


@pytest.fixture(scope="session")
def dipole187(basis187):
    return dipole_matrix(basis187)


@pytest.fixture(scope="session")
def prop187(dipole187):
    return Propagator(dipole187, fs_to_au(10.0))


@pytest.fixture(scope="session")
def nominal_pulse():
    return HcpPulse.from_targets(Q=Q_NOMINAL, fwhm=fs_to_au(440.0))


@pytest.fixture(scope="session")
def hydrogen_grid():
    return build_grid(1e-4, 400.0, 20000)


@pytest.fixture(scope="session")
def hydrogen6(hydrogen_grid):
    return build_basis((1, 6), 5, grid=hydrogen_grid, mode="hydrogenic")


@pytest.fixture(scope="session")
def hydrogen3():
    return build_basis((1, 3), 2, grid=build_grid(1e-4, 200.0, 20000), mode="hydrogenic")


@pytest.fixture
def record():
    """Log one acceptance line; printed in the terminal summary."""

    def _record(name: str, passed: bool, detail: str = ""):
        line = f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip()
        print(line)
        _ACCEPTANCE.append((name, passed, line))
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(_ACCEPTANCE, key=lambda x: int(x[0].split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
