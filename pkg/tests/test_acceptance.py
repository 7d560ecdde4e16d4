"""Acceptance gate: the nine criteria at full volume.

Each test runs one criterion through the suite machinery at the full
profile and prints a single pass/fail line that survives capture.
"""

import pytest

from hamalg.suite import FULL, TIME_LIMITS, run_criterion

SEED = 42


@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(number, capsys):
    res = run_criterion(number, FULL, SEED)
    with capsys.disabled():
        print(f"\nACCEPTANCE {res.number} ({res.title}): "
              f"{'PASS' if res.passed else 'FAIL'}  [{res.seconds:.2f}s]")
    assert res.passed, res.failures[:5]
    if number in TIME_LIMITS:
        # the budgets are also enforced inside run_criterion; asserting
        # here keeps the gate explicit
        assert res.seconds < TIME_LIMITS[number]
