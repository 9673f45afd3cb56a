from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from vbcast import analytic as an
from vbcast.errors import ArgumentError, DependencyError
from vbcast.optimizer import _golden_max


@st.composite
def abc_params(draw, dims=(2, 3, 4, 5, 6)):
    d = draw(st.sampled_from(dims))
    top = an.eps_max(d)
    e1 = draw(st.floats(0.0, top, allow_nan=False))
    e2 = draw(st.floats(0.0, top, allow_nan=False))
    return d, e1, e2


# 1-to-2 overhead


@pytest.mark.parametrize("d", range(2, 11))
def test_exact_overhead_family(d):
    assert an.u2_closed(d, 0, 0) == pytest.approx((3 * d - 1) / (d + 1), abs=1e-12)
    assert an.v2_exact(d) == Fraction(3 * d - 1, d + 1)


def test_v2_examples():
    assert an.v2_exact(2) == Fraction(5, 3)
    assert an.v2_exact(3) == 2


def test_v2_increases_toward_three():
    vals = [an.v2_exact(d) for d in range(2, 200)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert all(v < 3 for v in vals)


@pytest.mark.parametrize("d,e1,e2,expected", [
    (2, 0.1, 0.1, 1.4),
    (2, 0.3, 0.3, 1.0),
    (2, 0.0, 0.0, 5 / 3),
    (3, 0.0, 0.0, 2.0),
])
def test_u2_examples(d, e1, e2, expected):
    assert an.u2_closed(d, e1, e2) == pytest.approx(expected, abs=1e-12)
    assert an.u2_alternate(d, e1, e2) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_u2_saturates_at_max_error(d):
    e = an.eps_max(d)
    assert an.u2_closed(d, e, e) == 1.0


@given(abc_params())
@settings(max_examples=300)
def test_closed_forms_agree(params):
    d, e1, e2 = params
    assert an.u2_closed(d, e1, e2) == pytest.approx(an.u2_alternate(d, e1, e2), abs=1e-12)


@given(abc_params())
@settings(max_examples=200)
def test_u2_symmetric_and_bounded(params):
    d, e1, e2 = params
    u = an.u2_closed(d, e1, e2)
    assert u == pytest.approx(an.u2_closed(d, e2, e1), abs=1e-12)
    assert 1.0 <= u <= an.v2_exact(d) + 1e-12


@given(abc_params(), st.floats(0.0, 0.2))
@settings(max_examples=200)
def test_u2_monotone_in_symmetric_error(params, step):
    d, e, _ = params
    e2 = min(e + step, an.eps_max(d))
    assert an.u2_closed(d, e2, e2) <= an.u2_closed(d, e, e) + 1e-12


def test_error_range_checked():
    with pytest.raises(ArgumentError):
        an.u2_closed(2, 0.8, 0.0)
    with pytest.raises(ArgumentError):
        an.u2_closed(2, -0.1, 0.0)
    with pytest.raises(ArgumentError):
        an.u2_closed(1, 0.0, 0.0)
    with pytest.raises(ArgumentError):
        an.u2_closed(2, float("nan"), 0.0)


# error <-> depolarizing parameter


@pytest.mark.parametrize("d,eps,p", [(2, 0.0, 0.0), (2, 0.75, 1.0), (3, 0.4, 0.45)])
def test_eps_to_p(d, eps, p):
    assert an.eps_to_p(d, eps) == pytest.approx(p)


@given(abc_params())
def test_eps_round_trip(params):
    d, e, _ = params
    assert an.p_to_eps(d, an.eps_to_p(d, e)) == pytest.approx(e, abs=1e-14)


# cone-program pieces


def test_socp_examples():
    g, h, k = an.socp_coeffs(2, 0, 0)
    assert (g, h) == (4, 0) and k == pytest.approx(math.sqrt(3))
    g, h, k = an.socp_coeffs(2, 0.3, 0.1)
    assert g == pytest.approx(3.2)
    assert h == pytest.approx(0.4 / math.sqrt(3))


@given(abc_params())
@settings(max_examples=1000)
def test_h_bounded_by_k_over_d(params):
    d, e1, e2 = params
    g, h, k = an.socp_coeffs(d, e1, e2)
    assert abs(h) <= k / d + 1e-12
    # g^2 - k^2 h^2 >= 0 keeps theta* real
    assert g * g - k * k * h * h >= -1e-12


def test_theta_star_symmetric():
    assert an.theta_star(2, 0, 0) == pytest.approx(0)
    assert an.f_theta(0, 2, 0, 0) == pytest.approx(4 / 3)
    assert 2 * an.f_theta(0, 2, 0, 0) - 1 == pytest.approx(5 / 3)


@given(abc_params())
@settings(max_examples=200)
def test_theta_star_is_stationary(params):
    d, e1, e2 = params
    assume(max(e1, e2) < an.eps_max(d) - 1e-6)
    t = an.theta_star(d, e1, e2)
    assert an.f_theta_derivative(t, d, e1, e2) == pytest.approx(0, abs=1e-10)
    assert an.f_theta(t, d, e1, e2) == pytest.approx(an.f_max_closed(d, e1, e2), abs=1e-10)


@given(abc_params(), st.floats(-6, 6))
@settings(max_examples=200)
def test_derivative_matches_finite_difference(params, theta):
    d, e1, e2 = params
    step = 1e-6
    fd = (an.f_theta(theta + step, d, e1, e2) - an.f_theta(theta - step, d, e1, e2)) / (2 * step)
    assert an.f_theta_derivative(theta, d, e1, e2) == pytest.approx(fd, abs=1e-6)


@given(abc_params())
@settings(max_examples=200)
def test_fmax_gives_first_branch(params):
    d, e1, e2 = params
    first = 2 * an.f_max_closed(d, e1, e2) - 1
    assert max(first, 1.0) == pytest.approx(an.u2_closed(d, e1, e2), abs=1e-12)


def test_golden_section_oracle_matches_fmax():
    rng = np.random.default_rng(0)
    for _ in range(200):
        d = int(rng.choice([2, 3, 5]))
        e1, e2 = rng.uniform(0, an.eps_max(d), 2)
        theta, _ = _golden_max(lambda t: an.f_theta(t, d, e1, e2), -20.0, 20.0, 1e-12, 500)
        assert an.f_theta(theta, d, e1, e2) == pytest.approx(an.f_max_closed(d, e1, e2), abs=1e-9)


@given(abc_params())
@settings(max_examples=200)
def test_hyperbolic_star(params):
    d, e1, e2 = params
    t1, t2 = 1 - e1, 1 - e2
    # denominators vanish only at the max-error corner
    assume(2 * d * math.sqrt(t1 * t2) - (t1 + t2) > 1e-3)
    sh, ch = an.hyperbolic_star(d, e1, e2)
    t = an.theta_star(d, e1, e2)
    assert sh == pytest.approx(math.sinh(t), rel=1e-8, abs=1e-10)
    assert ch == pytest.approx(math.cosh(t), rel=1e-8)


# 1-to-N exact and probabilistic


@pytest.mark.parametrize("d,n,p,expected", [
    (2, 2, 1, Fraction(5, 3)),
    (2, 6, 1, Fraction(17, 7)),
    (2, 2, Fraction(1, 2), Fraction(5, 6)),
    (3, 3, 1, Fraction(13, 5)),
])
def test_s_n_examples(d, n, p, expected):
    assert an.s_n_closed(d, n, p) == expected


def test_s6_squared_below_six():
    s = an.s_n_closed(2, 6, 1)
    assert s * s == Fraction(289, 49)
    assert float(s * s) == pytest.approx(5.898, abs=1e-3)


def test_s_n_float_path():
    assert isinstance(an.s_n_closed(2, 3, 0.5), float)
    assert an.s_n_closed(2, 3, 0.5) == pytest.approx(1.0)


@given(st.integers(2, 8), st.integers(2, 50), st.fractions(Fraction(1, 100), 1))
@settings(max_examples=200)
def test_s_n_linear_in_p(d, n, p):
    assume(0 < p <= 1)
    assert an.s_n_closed(d, n, p) == p * an.v_n_exact(d, n)


@given(st.integers(2, 8), st.integers(2, 40))
def test_v_n_increasing_and_below_limit(d, n):
    v = an.v_n_exact(d, n)
    assert v < an.v_n_exact(d, n + 1)
    assert v < 2 * d - 1
    assert an.v_n_exact(d, 2) == an.v2_exact(d)


def test_no_go_constant():
    assert an.no_go_dimension_bound() == pytest.approx(1.5224, abs=1e-4)


def test_n_prob_two_copies():
    n = an.n_prob(2, 2, 1)
    assert n == Fraction(25, 9)
    assert n > 2
    assert not an.se_pbc(2, 2, 1)


@pytest.mark.parametrize("d,expected", [(2, 6), (3, 20), (4, 42)])
def test_min_n_exact(d, expected):
    assert an.min_n_for_se(d, 1) == expected


def _scan(d, p, cap=2000):
    for n in range(2, cap + 1):
        if an.se_pbc(d, n, p):
            return n
    return None


@pytest.mark.parametrize("d", range(2, 9))
def test_min_n_matches_exact_scan(d):
    assert an.min_n_for_se(d, 1) == _scan(d, 1)


@pytest.mark.parametrize("d,p", [(2, Fraction(9, 10)), (2, Fraction(1, 2)), (3, Fraction(3, 4)), (4, Fraction(9, 10))])
def test_min_n_prob_matches_exact_scan(d, p):
    assert an.min_n_for_se(d, p) == _scan(d, p)
    # float input gives the same answer
    assert an.min_n_for_se(d, float(p)) == _scan(d, p)


def test_min_n_prob_example():
    n = an.min_n_for_se(2, 0.9)
    assert isinstance(n, int)
    assert an.se_pbc(2, n, 0.9) and not an.se_pbc(2, n - 1, 0.9)


def test_min_n_vanishing_p_gives_none():
    assert an.min_n_for_se(2, 1e-4) is None


def test_min_n_cap():
    assert an.min_n_for_se(4, 1, cap=41) is None


@pytest.mark.parametrize("p", [0, -0.1, 1.5])
def test_bad_success_probability(p):
    with pytest.raises(ArgumentError):
        an.min_n_for_se(2, p)


@pytest.mark.parametrize("n", [2, 6, 20])
def test_dimension_bounds_track_min_n(n):
    # exact SE iff d below the bound
    for d in range(2, 6):
        assert an.se_pbc(d, n, 1) == (d < an.exact_se_dimension_bound(n))


def test_prob_bound_reduces_to_exact():
    for n in (3, 7, 40):
        assert an.prob_se_dimension_bound(n, 1.0) == pytest.approx(an.exact_se_dimension_bound(n))


# sample efficiency of approximate broadcasting


def test_se_spots():
    assert not an.se_abc(2, [0, 0])
    assert an.se_abc(2, [0.3, 0.3])


def test_se_boundary_cell_exists():
    # bisect along the diagonal for u2^2 = 2 - 2 eps
    lo, hi = 0.0, 0.3
    for _ in range(60):
        mid = (lo + hi) / 2
        if an.se_abc(2, [mid, mid]):
            hi = mid
        else:
            lo = mid
    u = an.u2_closed(2, hi, hi)
    assert u * u == pytest.approx(2 - 2 * hi, abs=1e-9)


def test_rate_naive():
    assert an.rate_naive(2) == Fraction(1, 2)


def test_rate_abc_exact_case():
    assert an.rate_abc(2, [0, 0]) == pytest.approx(9 / 25)


def test_rate_requires_solved_overhead_for_many_receivers():
    with pytest.raises(DependencyError):
        an.rate_abc(2, [0.1, 0.1, 0.1])
    assert an.rate_abc(2, [0.1] * 3, 1.7) == pytest.approx(0.9 / 1.7 ** 2)


# sample counts


def test_hoeffding_example():
    assert an.hoeffding_samples(2, 0.1, 0.05) == 738
    assert an.virtual_samples(1.0, 2, 0.1, 0.05) == 738


@given(st.floats(1, 5), st.floats(0.5, 4), st.floats(0.01, 0.5), st.floats(0.001, 0.5))
def test_virtual_samples_quadratic_in_overhead(v, c, eps, delta):
    raw = v * v * c * c * math.log(2 / delta) / (2 * eps * eps)
    assert an.virtual_samples(v, c, eps, delta) == math.ceil(raw)
    raw2 = 4 * raw
    assert an.virtual_samples(2 * v, c, eps, delta) == math.ceil(raw2)


def test_probabilistic_counts():
    base = an.virtual_samples(1.2, 2, 0.1, 0.05)
    assert an.probabilistic_samples(1.2, 1, 2, 0.1, 0.05) == base
    raw = 1.2 ** 2 * 4 * math.log(40) / 0.02
    assert an.probabilistic_samples(1.2, 0.5, 2, 0.1, 0.05) == math.ceil(raw * 16)


@pytest.mark.parametrize("args", [(1, 0, 0.1, 0.1), (1, 1, 0, 0.1), (1, 1, 0.1, 1.0), (0.5, 1, 0.1, 0.1)])
def test_virtual_samples_validation(args):
    with pytest.raises(ArgumentError):
        an.virtual_samples(*args)


def test_bias_bound():
    assert an.statistical_bias_bound(2, 0, 1) == 0
    assert an.statistical_bias_bound(2, 0.3, 1) == pytest.approx(0.4)
    assert an.statistical_bias_bound(2, 0.4, 1) > an.statistical_bias_bound(2, 0.3, 1)
    assert an.statistical_bias_bound(2, 0.3, 2) > an.statistical_bias_bound(2, 0.3, 1)


def test_problem_dataclasses_validate():
    with pytest.raises(ArgumentError):
        an.AbcProblem(2, (0.1,))
    with pytest.raises(ArgumentError):
        an.PbcProblem(2, 3, 0)
    assert an.AbcProblem(2, (0.1, 0.2)).n_receivers == 2
