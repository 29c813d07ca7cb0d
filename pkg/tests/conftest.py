import numpy as np
import pytest

from rpdhg_lab.generators import ToddSpec, derive_seed, family_certificate, generate_family, generate_todd
from rpdhg_lab.verification import t0_instance

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def t0():
    return t0_instance()


@pytest.fixture
def lp1_001():
    return generate_family("LP1", 0.01), family_certificate("LP1", 0.01)


@pytest.fixture
def lp2_01():
    return generate_family("LP2", 0.1), family_certificate("LP2", 0.1)


@pytest.fixture(scope="session")
def small_todd():
    return [generate_todd(ToddSpec(3, 6, derive_seed(5, i))) for i in range(6)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
