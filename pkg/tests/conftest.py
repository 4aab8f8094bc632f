"""Shared pytest hooks: echo the acceptance-criterion verdict lines.

The acceptance tests print one ``criterion N: PASS/FAIL`` line each;
with output capture active those lines are only shown for failing
tests, so they are also collected and replayed in the terminal summary.
"""

import sys


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get(
        "tests.test_acceptance"
    )
    lines = getattr(module, "REPORT_LINES", None) if module else None
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
