import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gridfall.dataset import synth_corpus, to_matrix

settings.register_profile("gridfall", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("gridfall")

DATA = os.path.join(os.path.dirname(__file__), "data")
ALBERTO = os.path.join(DATA, "alberto")


@pytest.fixture(scope="session")
def strong_corpus():
    return synth_corpus(0, 335, 0.11)


@pytest.fixture(scope="session")
def strong_xy(strong_corpus):
    return to_matrix(strong_corpus)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(str(c) for c in r) + "\n")
    return str(path)


# -- acceptance report ---------------------------------------------------------

def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def verdict(request):
    """``verdict(n, ok, detail)`` records one PASS/FAIL line for criterion ``n``."""
    def record(n, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n:>2}: {detail}"
        request.config._acceptance_lines.append((n, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
