import numpy as np
import pytest

from ppgdtuq.signals import Dataset, LabeledSignal, Signal


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_ds(arrays, split="test", labels=None, rate=32.0):
    labels = labels or [i % 2 for i in range(len(arrays))]
    recs = [LabeledSignal(f"r{i:03d}", Signal(a, rate), lab) for i, (a, lab) in enumerate(zip(arrays, labels))]
    return Dataset(split, recs)


# one PASS/FAIL line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[k])
