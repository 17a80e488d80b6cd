import numpy as np
import pytest

from rkbsnet import Architecture, KernelContext, SearchConfig

X_EX = np.array([[1.0, -1.0], [-1.0, 0.0], [0.0, 1.0]])


@pytest.fixture
def ctx():
    return KernelContext(Architecture((2, 2, 1)))


@pytest.fixture
def fast():
    return SearchConfig(starts=32, iters=150)


@pytest.fixture
def X3():
    return X_EX.copy()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
