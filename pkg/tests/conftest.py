import os
import sys
import warnings

import numpy as np
import pytest
from hypothesis import settings

from depthcause.errors import SparseGridWarning

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        number, title = marker.args
        _ACCEPTANCE.append((number, title, report.passed, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, duration in sorted(_ACCEPTANCE):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title} ({duration:.1f} s)")


@pytest.fixture
def three_constant():
    return np.array([[0.0] * 4, [1.0] * 4, [2.0] * 4])


@pytest.fixture
def crossing():
    grid = np.linspace(0.0, 1.0, 5)
    return grid, np.vstack((grid, 1.0 - grid, np.full(5, 0.5)))


@pytest.fixture(autouse=True)
def _quiet_sparse_grid():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SparseGridWarning)
        yield
