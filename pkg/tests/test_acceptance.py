"""The fifteen acceptance criteria at their stated tolerances.

Each criterion yields one ``[PASS]``/``[FAIL]`` line; the lines are printed
by the test and collected into the terminal summary (see conftest.py).
Statistical criteria use fixed seeds.
"""

import pytest

from restricted_lue.verification import REGISTRY, run_criterion

LINES = {}


@pytest.mark.parametrize("number", sorted(REGISTRY))
def test_criterion(number):
    res = run_criterion(number)
    LINES[number] = res.line()
    print(res.line())
    assert res.passed, res.line()
