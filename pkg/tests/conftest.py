import pytest

_LINES = {}


@pytest.fixture
def acceptance_report():
    """Record and print one pass/fail line for an acceptance criterion."""

    def report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES[number] = line
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_LINES):
        terminalreporter.write_line(_LINES[number])
