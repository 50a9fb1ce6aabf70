import os
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def criterion():
    """Context manager recording one PASS/FAIL line per acceptance criterion."""

    @contextmanager
    def record(number: int, title: str):
        info = {}
        t0 = time.perf_counter()
        try:
            yield info
        except BaseException as exc:
            msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            ACCEPTANCE_LINES.append(f"criterion {number} FAIL  {title} [{time.perf_counter() - t0:.1f}s] {msg}")
            raise
        detail = info.get("detail", "")
        ACCEPTANCE_LINES.append(f"criterion {number} PASS  {title} [{time.perf_counter() - t0:.1f}s] {detail}".rstrip())

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
