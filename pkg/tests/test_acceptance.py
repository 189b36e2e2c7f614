"""The twelve acceptance criteria at their stated tolerances.

Each test prints one pass/fail line; all lines are repeated in the terminal
summary.  Criteria 4 and 10 cannot be met as stated and are strict xfails, so
the suite turns red if either ever starts passing.
"""

import pytest

from ifs_overlap.acceptance import CRITERIA, run_criterion

from conftest import ACCEPTANCE_LINES

UNATTAINABLE = {
    4: "scaling residual at n=16 equals sup|F_16 - F_17|, at least half the largest atom of mu_16; above 2^-14 at golden and 3/4",
    10: "mu(tau_1 X) >= 11/27 > 3/8 at the golden ratio; enclosures contain 3/7 and 2/21 instead of 3/8 and 1/24",
}


def _param(k, title):
    marks = [pytest.mark.xfail(strict=True, reason=UNATTAINABLE[k])] if k in UNATTAINABLE else []
    return pytest.param(k, id=f"c{k:02d}-{title.replace(' ', '-')}", marks=marks)


@pytest.mark.parametrize("number", [_param(k, t) for k, t, _ in CRITERIA])
def test_criterion(number, request, capsys):
    r = run_criterion(number)
    line = r.line()
    request.config.stash[ACCEPTANCE_LINES].append(line)
    with capsys.disabled():
        print(f"\n{line}")
    assert r.passed, r.detail
