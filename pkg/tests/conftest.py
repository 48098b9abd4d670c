import numpy as np
import pytest

from dagmcmc.scoring import ScoreTable

from acceptance_log import LINES as ACCEPTANCE_LINES


def random_table(n: int, seed: int = 0, max_parents: int | None = None, spread: float = 2.0):
    """Arbitrary (non-BGe) score table; kernels must be correct for any scores."""
    rng = np.random.default_rng(seed)
    return ScoreTable.from_function(n, n - 1 if max_parents is None else max_parents,
                                    lambda i, m: float(rng.normal(0.0, spread)))


@pytest.fixture
def table3():
    return random_table(3, seed=11)


@pytest.fixture
def table4():
    return random_table(4, seed=12)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
