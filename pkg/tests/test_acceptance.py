"""Every acceptance criterion at its stated tolerance; one PASS/FAIL line each (run with -s to see them)."""

from __future__ import annotations

import pytest

from vbcast import acceptance as acc

CRITERIA = [
    acc.check_exact_overhead,
    acc.check_form_equivalence,
    acc.check_theta_search,
    acc.check_sdp_oracle,
    acc.check_spectra,
    acc.check_no_go_constants,
    acc.check_min_n,
    acc.check_twirl,
    acc.check_epsilon_delta,
    acc.check_se_spots,
]


@pytest.mark.parametrize("check", CRITERIA, ids=lambda fn: fn.__name__.removeprefix("check_"))
def test_criterion(check, capsys):
    result = check()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail


def test_criteria_numbered_one_to_ten():
    assert sorted(fn().criterion for fn in (acc.check_exact_overhead, acc.check_se_spots)) == [1, 10]
    assert len(CRITERIA) == 10
    assert {fn.__name__ for suite in acc.CHECKS.values() for fn in suite} == {fn.__name__ for fn in CRITERIA}
