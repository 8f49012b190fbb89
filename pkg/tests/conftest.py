"""Shared test plumbing: acceptance-criterion result lines.

Acceptance tests register one line per criterion; the terminal summary hook
prints them all at the end of the run so the pass/fail ledger is visible in
ordinary pytest output.
"""
CRITERION_LINES: list[tuple[int, str]] = []


def record_criterion(num: int, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    CRITERION_LINES.append((num, f"criterion {num:2d}: {status} - {detail}"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(CRITERION_LINES):
        terminalreporter.write_line(line)
