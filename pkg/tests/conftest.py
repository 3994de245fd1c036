import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


def record(criterion: str, ok: bool, detail: str):
    """Log an acceptance verdict for the end-of-run summary, then assert it."""
    ACCEPTANCE.append((criterion, ok, detail))
    assert ok, f"{criterion}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {crit}: {detail}")
