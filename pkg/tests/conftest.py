import pytest

CRITERIA: dict[int, str] = {}


def record(number: int, passed: bool, detail: str) -> bool:
    CRITERIA[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})"
    return passed


@pytest.fixture
def criterion():
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
