"""Acceptance gate: one pass/fail line per criterion."""

import pytest

from conftest import ACCEPTANCE_LINES
from teleopt.acceptance import CRITERIA, AcceptanceContext, run_criterion


@pytest.fixture(scope="module")
def ctx():
    return AcceptanceContext()


@pytest.mark.parametrize("number", [n for n, _, _ in CRITERIA], ids=[name for _, name, _ in CRITERIA])
def test_criterion(ctx, number):
    res = run_criterion(number, ctx)
    print(res.line())
    ACCEPTANCE_LINES.append(res.line())
    assert res.passed, res.detail
