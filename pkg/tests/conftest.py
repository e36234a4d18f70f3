import sys

import numpy as np
import pytest

from uniformis.core import coordinate_family, euclidean_subset, weighted_abs, PseudometricFamily, coordinate_abs


@pytest.fixture
def line():
    return coordinate_family(1)


@pytest.fixture
def plane():
    return coordinate_family(2, saturate_=True)


@pytest.fixture
def mixed_plane():
    """Three indices on R^2: one coordinate, a weighted l1 and the Euclidean norm."""
    return PseudometricFamily(2, (coordinate_abs("d1", 0), weighted_abs("w", [1.0, 0.5]),
                                  euclidean_subset("e", [0, 1])), separating=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
