import datetime

import numpy as np
import pytest

from mrlab.aggregates import CallRecord


def make_call_corpus(seed: int, n_rows: int) -> list:
    """Synthetic call log with whole-second durations.

    Integer durations keep every partial sum exact in float64, so
    engine results can be compared to oracles with == rather than
    approx.
    """
    rng = np.random.default_rng(seed)
    base = datetime.date(2024, 3, 1)
    records = []
    for _ in range(n_rows):
        day = base + datetime.timedelta(days=int(rng.integers(0, 14)))
        caller = f"06{rng.integers(0, 40):08d}"
        callee = f"07{rng.integers(0, 40):08d}"
        records.append(CallRecord(day, caller, callee, float(rng.integers(1, 3600))))
    return records


@pytest.fixture
def call_corpus():
    return make_call_corpus(7, 1000)
