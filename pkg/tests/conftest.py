import pytest

_CRITERIA = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_CRITERIA] = {}


@pytest.fixture
def criterion(request):
    """``criterion(n, ok, detail)`` records one checked part of acceptance criterion ``n``."""
    lines = request.config.stash[_CRITERIA]

    def record(number: int, ok: bool, detail: str) -> bool:
        lines.setdefault(number, []).append((bool(ok), detail))
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_CRITERIA]
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        parts = lines[n]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {n:>2}: {verdict} | " + "; ".join(d for _, d in parts))
