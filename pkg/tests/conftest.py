import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

REPO = Path(__file__).resolve().parent.parent
MUTAG = REPO / "data" / "MUTAG"


@pytest.fixture
def mutag_dir():
    if not (MUTAG / "MUTAG_A.txt").is_file():
        pytest.skip("MUTAG files not present under data/MUTAG")
    return MUTAG


# acceptance verdicts, filled by test_acceptance.py and echoed at the end
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
