import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# filled by tests/test_acceptance.py, printed after the run
CRITERIA = {}


def record(number: int, passed: bool, detail: str):
    CRITERIA[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)
