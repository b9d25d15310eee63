import pytest

ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture(scope="session")
def acceptance(request):
    """Records one (passed, detail) entry per acceptance criterion."""
    return request.config.stash[ACCEPTANCE]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        passed, title, detail = results[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}  {title}: {detail}")
