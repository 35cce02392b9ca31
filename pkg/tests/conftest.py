import pytest

_CHECKLIST: list[str] = []


@pytest.fixture
def checklist():
    """Collect one human-readable pass/fail line per end-to-end check."""

    def record(name: str, ok: bool, detail: str) -> None:
        verdict = "PASS" if ok else "FAIL"
        _CHECKLIST.append(f"[{name}] {detail} -> {verdict}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CHECKLIST:
        terminalreporter.section("acceptance checklist")
        for line in _CHECKLIST:
            terminalreporter.line(line)
