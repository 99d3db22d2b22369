import json
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def oracle_fixtures():
    return json.loads((HERE / "fixtures" / "oracles.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def blobs(rng, n_per=15, gap=3.0, d=2):
    X = np.r_[rng.normal(-gap, 0.5, (n_per, d)), rng.normal(gap, 0.5, (n_per, d))]
    y = np.r_[-np.ones(n_per), np.ones(n_per)]
    return X, y


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
