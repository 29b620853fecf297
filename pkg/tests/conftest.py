import time
from contextlib import contextmanager

import pytest

_RESULTS: list = []


@contextmanager
def _record(number: int, title: str, limit_s=None):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        if ok and limit_s is not None and elapsed >= limit_s:
            ok = False
            title += f" (over the {limit_s:g} s budget)"
        _RESULTS.append((number, "PASS" if ok else "FAIL", title, elapsed))
    if not ok:
        pytest.fail(f"criterion {number}: {title}")


@pytest.fixture
def criterion():
    """``with criterion(n, title, limit_s): ...`` records one acceptance line."""
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, title, elapsed in sorted(_RESULTS):
        terminalreporter.write_line(f"{status} criterion {number}: {title} [{elapsed:.2f} s]")
