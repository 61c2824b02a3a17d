import pytest

_RESULTS = []


@pytest.fixture(scope="session")
def record():
    """``record(number, name, passed, detail)`` files one acceptance verdict for the summary."""

    def add(number, name, passed, detail=""):
        _RESULTS.append((number, name, bool(passed), detail))

    return add


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_RESULTS, key=lambda r: r[0]):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {number}. {name}: {detail}")
