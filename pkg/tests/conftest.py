import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from flarecount import FrequencyTable  # noqa: E402


@pytest.fixture
def small():
    return FrequencyTable({1: 10, 2: 5})


@pytest.fixture
def tiny_log():
    from flarecount import EventLog
    return EventLog(1.0, {"A": [0.1, 0.6], "B": [0.4]})


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
