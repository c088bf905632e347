import warnings

import pytest

ACCEPTANCE_LINES: list[str] = []


def record(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _quiet_alpha_warning():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="alpha equals 1")
        yield
