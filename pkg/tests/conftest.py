import sys

import numpy as np
import pytest

from slhierarchy.ingest import PriceSeries


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def walk(rng):
    """Gaussian random walk long enough for the default tau grid."""
    return PriceSeries(np.cumsum(rng.standard_normal(4096)), 0, "walk")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)
