from __future__ import annotations

import contextlib
import random
import time

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return random.Random(20240611)


_RESULTS = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Context manager recording one acceptance line: pass unless the body raises."""
    results = request.config.stash.setdefault(_RESULTS, [])

    @contextlib.contextmanager
    def record(number: int, title: str):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title} ({time.perf_counter() - start:.1f} s)"
            results.append((number, line))
            print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if results:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(results):
            terminalreporter.write_line(line)
