import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from onebit.core import ula_response  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def b8():
    return ula_response(8, math.radians(10))


@pytest.fixture(scope="session")
def toy_h():
    # 4x8 parity-check matrix of rank 4 -> 16 codewords
    return np.array([
        [1, 1, 0, 1, 1, 0, 0, 0],
        [0, 1, 1, 0, 0, 1, 0, 1],
        [1, 0, 1, 1, 0, 0, 1, 0],
        [0, 1, 0, 0, 1, 1, 1, 1],
    ], dtype=np.uint8)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
