import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pigec.corpus import XgecExample  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

WORKED_SOURCE = "What is the difference between genetic disorder and other disorders ."
WORKED_TARGET = "What is the difference between genetic disorders and other disorders ?"

# acceptance lines collected during the run, printed in the terminal summary
CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for ok, name, detail in CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def worked_pair():
    return WORKED_SOURCE, WORKED_TARGET


@pytest.fixture
def few_shot_examples():
    return [
        XgecExample.build(
            "fs1", WORKED_SOURCE, WORKED_TARGET,
            ["The noun should be plural because it refers to a category of disorders.",
             "The sentence is a question, so it ends with a question mark."]),
        XgecExample.build(
            "fs2", "He go to school every days .", "He goes to school every day .",
            ["A third-person singular subject takes the -s form of the verb.",
             "After every, the noun stays singular."]),
        XgecExample.build("fs3", "I like apples .", "I like apples .", []),
    ]
