import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# filled by the acceptance tests: (criterion, passed, detail)
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, status, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{status:<4} {criterion}: {detail}")
