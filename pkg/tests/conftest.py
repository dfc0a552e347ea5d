"""Shared pytest plumbing: the acceptance suite records a verdict per
criterion here so the terminal summary shows one PASS/FAIL line each,
even though pytest captures stdout of passing tests."""

CRITERIA: dict = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        ok, detail = CRITERIA[num]
        line = f"CRITERION {num}: {'PASS' if ok else 'FAIL'}"
        if detail and not ok:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
