"""Acceptance battery: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or as a script with
``python tests/test_acceptance.py`` (exit status 0 iff every criterion passes).
"""

import sys

import pytest

from stefan_lab import verify as vf


@pytest.mark.parametrize("criterion", vf.CRITERIA, ids=lambda fn: fn.__name__)
def test_criterion(criterion, capsys):
    res = criterion()
    with capsys.disabled():
        print(f"\n{res.line()}  ({res.seconds:.1f} s)")
    assert res.passed, res.summary


if __name__ == "__main__":
    results = vf.run_all(echo=print)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    sys.exit(0 if all(r.passed for r in results) else 1)
