import pytest

_CRITERIA = {}


@pytest.fixture
def criterion(capsys):
    """Record the outcome of an acceptance criterion and echo it immediately."""

    def record(cid: int, ok: bool, detail: str):
        line = f"AC{cid:02d} {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA.setdefault(cid, []).append((ok, line))
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA):
        for _, line in _CRITERIA[cid]:
            terminalreporter.write_line(line)
