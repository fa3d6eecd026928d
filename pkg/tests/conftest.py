import pytest

_LINES_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES_KEY] = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Lines are printed immediately (visible with ``-s``) and repeated in the
    terminal summary.
    """
    lines = request.config.stash[_LINES_KEY]

    def _report(criterion, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        print(line)
        lines.append(line)

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
