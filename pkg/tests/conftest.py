import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import population  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def pop222():
    return population((2, 2, 2), 7)


@pytest.fixture(scope="session")
def pop212():
    return population((2, 1, 2), 4)


@pytest.fixture(scope="session")
def pop121():
    return population((1, 2, 1), 2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def oracle_corpus(pop222, pop212, pop121):
    import props
    return props.oracle_pairs(pop222, pop212, pop121)


@pytest.fixture(scope="session")
def suite(oracle_corpus):
    """Run a property suite from ``props`` once per session and cache the failures."""
    import props
    cache = {}
    needs_pairs = {"equivalence_oracle_agreement", "equivalence_symmetry",
                   "probe_monotonicity", "triple_product_conjugacy"}

    def run(name):
        if name not in cache:
            fn = getattr(props, name)
            cache[name] = fn(oracle_corpus) if name in needs_pairs else fn()
        return cache[name]

    return run
