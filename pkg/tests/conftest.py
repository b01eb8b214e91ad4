import numpy as np
import pytest

from basinlab.core import make_rng


@pytest.fixture
def rng():
    return make_rng(20240601)


def naive_matmul(a, b):
    """Triple-loop product, independent of numpy's matmul."""
    rows, inner = a.shape
    cols = b.shape[1]
    out = np.zeros((rows, cols))
    for i in range(rows):
        for j in range(cols):
            s = 0.0
            for k in range(inner):
                s += a[i, k] * b[k, j]
            out[i, j] = s
    return out


# one summary line per acceptance criterion, printed after the test run
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def report():
    def _report(criterion: int, ok: bool, detail: str) -> bool:
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[criterion] = line
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
