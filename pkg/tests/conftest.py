import numpy as np
import pytest

from dihedral.continuum import solve_continuum
from dihedral.verify import approximate_inverse, prepare


@pytest.fixture(scope="session")
def alpha_1000():
    return solve_continuum(1000)


@pytest.fixture(scope="session")
def a_dagger_1000(alpha_1000):
    return approximate_inverse(alpha_1000)


@pytest.fixture(scope="session")
def radii_1000(alpha_1000, a_dagger_1000):
    return prepare(alpha_1000, a_dagger_1000, 0.02, "standard")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import gate

    if gate.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(gate.LINES, key=lambda s: int(s[1:].split()[0].rstrip("ab"))):
            terminalreporter.write_line(line)
