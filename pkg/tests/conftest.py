import numpy as np
import pytest

from plad.core import normalize_columns


def gaussian_design(n, p, seed):
    return normalize_columns(np.random.default_rng(seed).standard_normal((n, p)))


@pytest.fixture
def design():
    return gaussian_design


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
