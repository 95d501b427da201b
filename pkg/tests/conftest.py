"""Shared pytest plumbing: collect acceptance-criterion lines for the summary."""
import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    def record(number: int, description: str, passed: bool, detail: str = ""):
        status = "PASS" if passed else "FAIL"
        suffix = f"  [{detail}]" if detail else ""
        line = f"criterion {number:2d} {status}: {description}{suffix}"
        _ACCEPTANCE_LINES.append((number, line))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
