import pytest

from loghodge.lattice_core import LatticePolytope
from loghodge.tropical_model import build_fermat, build_reflexive_boundary, legendre_dual

# Lines recorded by the acceptance run, echoed in the terminal summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cubic():
    return build_fermat(3)


@pytest.fixture(scope="session")
def quartic():
    return build_fermat(4)


@pytest.fixture(scope="session")
def quintic():
    return build_fermat(5)


@pytest.fixture(scope="session")
def quintic_dual(quintic):
    return legendre_dual(quintic)


@pytest.fixture(scope="session")
def octahedron():
    return build_reflexive_boundary(LatticePolytope(
        [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]))


@pytest.fixture(scope="session")
def square():
    return build_reflexive_boundary(LatticePolytope([(1, 0), (-1, 0), (0, 1), (0, -1)]))
