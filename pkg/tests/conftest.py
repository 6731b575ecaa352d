import pytest

RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """record(n, passed, detail) stores one acceptance line and asserts it."""
    def _record(n: int, passed: bool, detail: str):
        RESULTS[n] = (bool(passed), detail)
        line = f"criterion {n}: {'PASS' if passed else 'FAIL'} ({detail})"
        print(line)
        assert passed, line
    return _record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
