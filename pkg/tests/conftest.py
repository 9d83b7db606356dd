"""Shared pytest hooks: collect acceptance verdict lines for the run summary."""

VERDICT_LINES = []


def record_verdict(line: str) -> None:
    VERDICT_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if VERDICT_LINES:
        terminalreporter.section("acceptance battery")
        for line in VERDICT_LINES:
            terminalreporter.write_line(line)
