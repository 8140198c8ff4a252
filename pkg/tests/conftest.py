import pytest

VERDICTS = {}


@pytest.fixture
def verdict(request):
    """Record a one-line acceptance verdict, printed in the terminal summary."""

    def record(number, ok, detail):
        VERDICTS[number] = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
