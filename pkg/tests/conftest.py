import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def planted6():
    """Six 2-D points, two classes, interleaved near a boundary."""
    x = np.array([[0.0, 0.0], [0.4, 0.1], [1.1, -0.2], [0.2, 0.9], [0.9, 0.8], [1.3, 0.6]])
    y = np.array([0, 0, 0, 1, 1, 1])
    return x, y


# criterion lines recorded by the acceptance suite, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
