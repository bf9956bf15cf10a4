import sys
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lambda_memory.model import ResolutionWarning  # noqa: E402


@pytest.fixture(autouse=True)
def _quiet_resolution():
    # presets deliberately run coarser than the dense-kernel rule of thumb;
    # the state-space march is exact in the kernel oscillation
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
