import pytest

from rangeinfo.signal_model import SystemConfig
from rangeinfo.typicality import entropy_references

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(label: str, ok: bool, detail: str):
        line = f"{label}: {'PASS' if ok else 'FAIL'} | {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0][1:])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def refs_10db(tmp_path_factory):
    cache = tmp_path_factory.mktemp("refs")
    return entropy_references(SystemConfig(snr_db=10.0), 10_000, cache)
