import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from pctrack.matrices import EXAMPLE_NON_PERCENTILE, EXAMPLE_OPTIMAL_MATCH  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def match_chain():
    return np.array(EXAMPLE_OPTIMAL_MATCH)


@pytest.fixture
def split_chain():
    return np.array(EXAMPLE_NON_PERCENTILE)


ACCEPTANCE_LINES: list = []


@pytest.fixture
def verdict():
    """Record and print one PASS/FAIL line, then assert it."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2} {title}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
