import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def verdict(capsys):
    """Print and record one PASS/FAIL line per acceptance criterion."""

    def emit(criterion, checks):
        ok = all(passed for _, passed, _ in checks)
        lines = [f"criterion {criterion}: {'PASS' if ok else 'FAIL'}"]
        lines += [f"    [{'PASS' if p else 'FAIL'}] {name}: {detail}" for name, p, detail in checks]
        _ACCEPTANCE_LINES.extend(lines)
        with capsys.disabled():
            print("\n" + "\n".join(lines))
        failed = [f"{name} ({detail})" for name, p, detail in checks if not p]
        assert not failed, "; ".join(failed)

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
