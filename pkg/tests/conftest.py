import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_line():
    def rec(line: str):
        ACCEPTANCE_LINES.append(line)
        print(line)

    return rec


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
