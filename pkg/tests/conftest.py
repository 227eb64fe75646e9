import pytest

_CRITERIA = {}


@pytest.fixture(scope="session")
def criteria():
    """Acceptance results, ``{number: (passed, detail)}``, printed at the end of the run."""
    return _CRITERIA


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
