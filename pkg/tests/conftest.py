import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from weakmem.reorder import architecture  # noqa: E402


@pytest.fixture(params=["sc", "tso", "arm-mca", "arm-nmca", "power"])
def arch(request):
    return architecture(request.param)


@pytest.fixture
def corpus_dir():
    from weakmem.litmus import bundled_corpus

    return bundled_corpus()


_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def criterion(request):
    """``criterion(n, ok, detail, seconds, limit)`` records and asserts one acceptance line."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def record(n, ok, detail, seconds, limit):
        in_time = seconds <= limit
        verdict = "PASS" if ok and in_time else "FAIL"
        line = f"{verdict} criterion {n}: {detail} [{seconds:.2f}s, limit {limit:g}s]"
        lines.append(line)
        print(line)
        assert ok, line
        assert in_time, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
