from __future__ import annotations

import pytest

from lensjet.boundary import OracleDataset
from lensjet.section5 import build_f1, build_f2
from lensjet.warp import preset


@pytest.fixture(scope="session")
def exp_ds():
    return OracleDataset(preset("exp-decay"), eps=0.05)


@pytest.fixture(scope="session")
def sec5_pair():
    profile = build_f1()
    return profile, build_f2(profile)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
