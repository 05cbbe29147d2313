import pytest

CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion(capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def report(number: int, ok: bool, detail: str, seconds: float) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  ({seconds:.2f} s)  {detail}"
        CRITERIA[number] = line
        with capsys.disabled():
            print("\n" + line)

    return report


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])
