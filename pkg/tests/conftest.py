import warnings

import numpy as np
import pytest

from pvf import field as F
from pvf.linalg import FieldMatrix, split_matrix

P = F.MERSENNE_61

# worked 3x3 example: det 1, so the inverse is integral
A3_ROWS = [[1, 2, 3], [1, 3, 3], [1, 2, 4]]
A3_INV_ROWS = [[6, -2, -3], [-1, 1, 0], [-1, 0, 1]]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def a3():
    return FieldMatrix.from_rows(A3_ROWS, P)


@pytest.fixture
def a3_set(a3):
    return split_matrix(a3, delta=0)


@pytest.fixture(autouse=True)
def _quiet_eta_warning():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="dropout rate")
        yield


# ---------------------------------------------------------------------------
# Acceptance report
# ---------------------------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record and print one pass/fail line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
