"""Shared pytest hooks: echo acceptance verdict lines after the run.

The acceptance tests record one PASS/FAIL line per shipped guarantee; the
default fd-level capture would swallow them, so they are replayed here in a
summary section that always reaches the terminal.
"""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "_VERDICTS", None) if mod else None
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
