"""Shared fixtures and the acceptance-line reporter."""

import numpy as np
import pytest

from stresslab import make_blobs, make_informative

# (criterion id, status, detail) rows collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def record_criterion(cid: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    line = f"ACCEPTANCE {cid}: {status}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def record_skip(cid: str, reason: str):
    ACCEPTANCE_LINES.append(f"ACCEPTANCE {cid}: SKIP ({reason})")
    pytest.skip(reason)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def blobs3():
    """Well-separated 3-class blobs, enough rows for 5-fold work."""
    X, y = make_blobs(90, 4, 3, spread=0.8, seed=31)
    return X, y


@pytest.fixture
def planted():
    """3 informative of 6 columns, 3 classes, known positions."""
    X, y, pos = make_informative(150, 6, 3, 3, separation=3.0, seed=17)
    return X, y, pos


def random_labels(rng, n, c):
    """Label vector guaranteed to contain every class at least once."""
    y = rng.integers(0, c, size=n)
    y[:c] = np.arange(c)
    rng.shuffle(y)
    return y
