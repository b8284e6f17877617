import pytest

ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Append ``(criterion, passed, detail)``; printed at the end of the run."""
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda x: int(x[0].split()[1])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
