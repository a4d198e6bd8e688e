import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import _report

    if _report.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in _report.lines():
            terminalreporter.write_line(line)
