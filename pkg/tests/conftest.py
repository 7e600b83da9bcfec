import numpy as np
import pytest

from zdc.belief import squared_error
from zdc.source import eight_state_source, new_finite_source


@pytest.fixture(scope="session")
def eight():
    return eight_state_source()


@pytest.fixture(scope="session")
def eight_dist(eight):
    return squared_error(eight.values)


@pytest.fixture
def two_state():
    return new_finite_source([[0.9, 0.1], [0.2, 0.8]], [1.0, 2.0])


def random_simplex(rng, m, size=None):
    return rng.dirichlet(np.ones(m), size=size)


ACCEPTANCE = {}


@pytest.fixture
def criterion(capsys):
    """Record a pass/fail line for an acceptance criterion and print it."""

    def record(tag, ok, detail=""):
        line = f"{tag} {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        ACCEPTANCE[tag] = line
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for tag in sorted(ACCEPTANCE, key=lambda t: (int(t[1:].split()[0]), t)):
            terminalreporter.write_line(ACCEPTANCE[tag])
