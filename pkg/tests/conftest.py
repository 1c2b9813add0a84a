from __future__ import annotations

import math

import pytest

from qkicks.classical import TopParams
from qkicks.spin import build_rep

ALPHA = math.pi / 2
BETA = 3.0

# Fig-1 probe points, (phi, theta): regular island vs chaotic sea
T1 = (2.20, 2.25)
T2 = (3.57, 2.25)

_ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE_LINES.append(line)


@pytest.fixture(scope="session")
def rep10():
    return build_rep(5.0)  # N = 10 spins


@pytest.fixture(scope="session")
def top_params():
    return TopParams(alpha=ALPHA, beta=BETA)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
