import pytest

_LINES = {}


@pytest.fixture
def acceptance_report():
    """record(n, ok, detail): one summary line per acceptance criterion."""
    def record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES[n] = line
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_LINES):
            terminalreporter.write_line(_LINES[n])
