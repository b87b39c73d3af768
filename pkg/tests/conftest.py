import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES = {}


def naive_toeplitz(x, seed, m):
    """Bit-by-bit T @ x over GF(2) with T[j, k] = seed[j - k + n - 1]."""
    x = np.asarray(x, dtype=np.int64)
    n = x.size
    out = np.zeros(m, dtype=np.uint8)
    for j in range(m):
        acc = 0
        for k in range(n):
            acc ^= int(seed[j - k + n - 1]) & int(x[k])
        out[j] = acc
    return out


@pytest.fixture
def record_criterion():
    """Register a one-line verdict for the acceptance summary."""

    def _record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
