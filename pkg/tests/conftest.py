from __future__ import annotations

import numpy as np
import pytest

from swarmfield.grid import make_grid


@pytest.fixture(scope="session")
def grid60():
    return make_grid((-5.0, 5.0, -5.0, 5.0), 60, 60)


@pytest.fixture(scope="session")
def grid30():
    return make_grid((-5.0, 5.0, -5.0, 5.0), 30, 30)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one verdict line per acceptance criterion."""
    return request.config.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
