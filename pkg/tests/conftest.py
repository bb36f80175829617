import pytest

_criteria = []


@pytest.fixture
def criterion():
    """Record ``(number, title, passed, detail)`` for the acceptance summary."""

    def record(number, title, passed, detail=""):
        _criteria.append((number, title, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(_criteria):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
