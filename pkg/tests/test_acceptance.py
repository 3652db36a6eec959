"""Acceptance criteria at the shipped settings; each test prints its PASS/FAIL line."""
import pytest

from kpzeternal.harness.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    result = run_criterion(number)
    with capsys.disabled():
        print("\n" + result.line())
        for c in result.checks:
            if not c.passed:
                print(f"    BAD {c.name}: {c.detail}")
    assert result.passed, result.line()
