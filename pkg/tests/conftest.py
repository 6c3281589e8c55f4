from pathlib import Path

import pytest

from quantbench import datasets
from quantbench.errors import DatasetError


def _fetch(fn):
    try:
        return fn()
    except (DatasetError, OSError, ImportError) as exc:
        pytest.skip(f"dataset unavailable: {exc}")


@pytest.fixture(scope="session")
def wdbc_path() -> Path:
    return _fetch(datasets.fetch_wdbc)


@pytest.fixture(scope="session")
def heart_path() -> Path:
    return _fetch(datasets.fetch_heart)


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    """Record one acceptance line: PASS, FAIL or FLAG (informational miss)."""
    lines = request.config.stash[_VERDICTS]

    def record(number: int, status: str, detail: str) -> str:
        line = f"[{status}] criterion {number:>2}: {detail}"
        lines.append((number, line))
        print(line)
        return status

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
