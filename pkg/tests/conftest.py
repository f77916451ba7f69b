import numpy as np
import pytest

from recomb.genome import GenomeLayout


@pytest.fixture
def instance_a():
    """Three sites, crossover probabilities 0.1 and 0.2."""
    return GenomeLayout.from_rho([0.1, 0.2])


def random_layout(rng: np.random.Generator, n_links: int) -> GenomeLayout:
    return GenomeLayout.from_rho(list(rng.uniform(0.01, 1.0 / n_links, size=n_links)))


ACCEPTANCE_LINES: list = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
