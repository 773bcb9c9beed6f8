"""Shared pytest plumbing for the acceptance suite.

The acceptance tests append one verdict line per criterion to
``ACCEPTANCE_LINES``; echoing them in the terminal summary keeps the
verdicts visible even when pytest captures stdout.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
