import pytest

_VERDICTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    """Record (criterion, passed, detail); the line is printed at session end."""

    def record(number: int, passed: bool, detail: str) -> bool:
        prev = _VERDICTS.get(number)
        if prev is not None:
            passed = passed and prev[0]
            detail = f"{prev[1]}; {detail}"
        _VERDICTS[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        passed, detail = _VERDICTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
