import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from delaypde import DelayProblem1D  # noqa: E402

EX_A = "(1+x^2)/(1+2*x*t+2*x^2+x^4)"
GAUSSIAN = "exp(-10*(4*x-1)^2)"


def gaussian(x):
    return np.exp(-10 * (4 * x - 1) ** 2)


@pytest.fixture
def example1():
    def make(alpha=0.02, final_time=0.5, **kw):
        return DelayProblem1D.from_strings(EX_A, "0.5", alpha, GAUSSIAN, "0",
                                           final_time=final_time, name="example1", **kw)
    return make


@pytest.fixture
def example2():
    def make(alpha=0.05, final_time=0.5, **kw):
        return DelayProblem1D.from_strings(EX_A, "1/(1+x^2*t^2)", alpha, GAUSSIAN, "0",
                                           final_time=final_time, name="example2", **kw)
    return make


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        terminalreporter.write_line(results[key])
