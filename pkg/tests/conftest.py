from pathlib import Path

import numpy as np
import pytest

from convqae.adiabatic import Schedule

DATA_DIR = Path(__file__).parent / "data"

# short anneal used where only plumbing, not solution quality, matters
FAST = Schedule(20, 10.0)

CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)
BLOCK = np.array(
    [[0, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 0]], dtype=np.uint8
)


def random_state(n, rng):
    from convqae.qsim import QuantumState

    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return QuantumState(n, v / np.linalg.norm(v))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def data_dir():
    return DATA_DIR


# one "PASS/FAIL criterion ..." line per acceptance check, shown after the run
RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
