import numpy as np
import pytest

from shaptree import fixtures

_CRITERIA = []


@pytest.fixture
def report():
    """Record a one-line acceptance verdict, printed in the terminal summary."""
    def record(name, passed, detail=""):
        _CRITERIA.append((name, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def model_a():
    return fixtures.model_a()


@pytest.fixture
def model_b():
    return fixtures.model_b()


@pytest.fixture
def both():
    return fixtures.BOTH_PRESENT.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
