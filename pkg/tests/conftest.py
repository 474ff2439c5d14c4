from pathlib import Path

import numpy as np
import pytest

from iwfsim.model import symmetric_two_user

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

# filled by test_acceptance.py, printed at the end of the session
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def two_user():
    """The two-user, two-channel example with cross gain 0.1."""
    return symmetric_two_user(0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def scenario_dir():
    return SCENARIOS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
