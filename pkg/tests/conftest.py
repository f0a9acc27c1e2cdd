"""Collects acceptance-criterion lines and echoes them after the run.

Captured stdout only surfaces for failing tests, so the acceptance
battery records its one-line verdicts here and a terminal-summary hook
prints them regardless of outcome.
"""

CRITERION_LINES = []


def record_criterion(line):
    CRITERION_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
