from __future__ import annotations

import numpy as np
import pytest

from nctwistor import constructions as cons
from nctwistor.chart import spec_from_strings

GENERIC_ROWS = [
    ["1+x1^2*x2", "0.3*sin(x3)", "0.1*x1*x4", "0"],
    ["0.3*sin(x3)", "2+cos(x1*x2)", "0", "0.2*x3"],
    ["0.1*x1*x4", "0", "exp(0.3*x4)", "0.1*x1"],
    ["0", "0.2*x3", "0.1*x1", "-1-0.2*x2^2"],
]
GENERIC_POINT = np.array([0.3, -0.2, 0.4, 0.1])


@pytest.fixture(scope="session")
def generic4():
    """A Lorentzian 4-metric with no symmetries (all curvature pieces non-zero)."""
    return spec_from_strings(GENERIC_ROWS, (1, 3), box=[(-0.5, 0.5)] * 4)


@pytest.fixture(scope="session")
def gallery():
    return cons.gallery()


@pytest.fixture(scope="session")
def flat3():
    return cons.flat(3)


@pytest.fixture(scope="session")
def sphere3():
    return cons.sphere_chart(3)


def central_gradient(fun, x, h=1e-4):
    """Central-difference gradient of a scalar (or array-valued) function."""
    x = np.asarray(x, dtype=float)
    out = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * h))
    return np.array(out)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
