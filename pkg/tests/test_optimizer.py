from __future__ import annotations

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vbcast import analytic as an
from vbcast.errors import ArgumentError, SizeError
from vbcast.optimizer import (
    DualCertificateAbc,
    SdpWitness,
    abc_closed_certificate,
    abc_dual_feasibility,
    abc_dual_theta_search,
    build_abc_primal_sdp,
    build_pbc_primal_sdp,
    certificate_from_theta,
    dual_objective,
    pbc_lp_solve,
    solve_abc_sdp,
    solve_pbc_sdp,
)
from vbcast.permutations import rng_from_seed
from vbcast.tensor import depolarizing_choi, umes


@st.composite
def abc_params(draw, dims=(2, 3, 4, 5)):
    d = draw(st.sampled_from(dims))
    top = an.eps_max(d)
    return d, draw(st.floats(0.0, top)), draw(st.floats(0.0, top))


# dual certificates


@given(abc_params())
@settings(max_examples=300, deadline=None)
def test_closed_certificate_feasible_and_tight(params):
    d, e1, e2 = params
    cert = abc_closed_certificate(d, e1, e2)
    rep = abc_dual_feasibility(d, e1, e2, cert)
    assert rep["feasible"], rep
    assert rep["objective"] == pytest.approx(an.u2_closed(d, e1, e2), abs=1e-12)


def test_certificate_symmetric_point():
    cert = abc_closed_certificate(2, 0, 0)
    assert cert.theta == pytest.approx(0)
    assert cert.z == pytest.approx(1.0)
    assert cert.c == pytest.approx(1 - 2 * cert.z)
    assert dual_objective(2, 0, 0, cert.x, cert.y, cert.z) == pytest.approx(5 / 3)


def test_zero_point_when_saturated():
    cert = abc_closed_certificate(2, 0.3, 0.3)
    assert (cert.x, cert.y, cert.z, cert.c) == (0.0, 0.0, 0.0, 1.0)
    assert abc_dual_feasibility(2, 0.3, 0.3, cert)["objective"] == 1.0


@given(abc_params(dims=(2, 3)), st.floats(0.05, 1.0))
@settings(max_examples=50, deadline=None)
def test_perturbed_certificate_detected(params, shift):
    d, e1, e2 = params
    cert = abc_closed_certificate(d, e1, e2)
    bad = DualCertificateAbc(cert.theta, cert.x + shift, cert.y + shift, cert.z, cert.c)
    # raising both x and y lifts lambda_+ above z
    assert not abc_dual_feasibility(d, e1, e2, bad)["feasible"]


@given(abc_params(), st.floats(-3, 3))
@settings(max_examples=200, deadline=None)
def test_any_theta_gives_a_lower_bound(params, theta):
    # every feasible dual point bounds the primal minimum from below
    d, e1, e2 = params
    cert = certificate_from_theta(d, e1, e2, theta)
    rep = abc_dual_feasibility(d, e1, e2, cert)
    if rep["feasible"]:
        assert rep["objective"] <= an.u2_closed(d, e1, e2) + 1e-12


def test_dense_check_can_be_skipped():
    cert = abc_closed_certificate(3, 0.1, 0.2)
    rep = abc_dual_feasibility(3, 0.1, 0.2, cert, dense=False)
    assert "dense_violation" not in rep and rep["feasible"]


def test_theta_search_matches_closed_form():
    rng = rng_from_seed(0)
    for _ in range(200):
        d = int(rng.choice([2, 3, 5]))
        e1, e2 = rng.uniform(0, an.eps_max(d), 2)
        res = abc_dual_theta_search(d, e1, e2)
        assert res.method == "theta_search"
        assert res.value == pytest.approx(an.u2_closed(d, e1, e2), abs=1e-8)


def test_theta_search_certificate_feasible():
    res = abc_dual_theta_search(2, 0.05, 0.2)
    assert abc_dual_feasibility(2, 0.05, 0.2, res.certificate, tol=1e-9)["feasible"]


# LP corners


@pytest.mark.parametrize("d,n", [(2, 2), (2, 6), (3, 4), (5, 10)])
def test_lp_matches_closed_form_exactly(d, n):
    for p in (Fraction(1), Fraction(1, 2), Fraction(3, 7)):
        res = pbc_lp_solve(d, n, p)
        assert res.value == an.s_n_closed(d, n, p)
        assert isinstance(res.value, Fraction)


@given(st.integers(2, 10), st.integers(2, 60), st.floats(0.01, 1.0))
def test_lp_first_corner_dominates(d, n, p):
    res = pbc_lp_solve(d, n, p)
    assert res.certificate.s1 >= res.certificate.s2
    assert res.certificate.active == "s1"
    assert res.value == pytest.approx(an.s_n_closed(d, n, p))


def test_lp_lambda_override():
    res = pbc_lp_solve(2, 3, 1, lambda_max=2 * 2 * 3)
    # lam = 2dN sends the first corner to zero, the second wins
    assert res.value == 1 and res.certificate.active == "s2"


# primal SDPs


@pytest.mark.parametrize("eps", [(0.0, 0.0), (0.1, 0.3), (0.25, 0.25), (0.05, 0.6)])
def test_abc_sdp_matches_closed_form(eps):
    res = solve_abc_sdp(2, eps)
    assert res.value == pytest.approx(an.u2_closed(2, *eps), abs=1e-5)


@pytest.mark.parametrize("n,p", [(2, 0.5), (2, 1.0), (3, 0.5), (3, 1.0), (4, 0.8)])
def test_pbc_sdp_matches_closed_form(n, p):
    res = solve_pbc_sdp(2, n, p)
    assert res.value == pytest.approx(float(an.s_n_closed(2, n, p)), abs=1e-5)


def test_pbc_sdp_qutrit():
    assert solve_pbc_sdp(3, 2, 0.7).value == pytest.approx(0.7 * 2, abs=1e-5)


def test_abc_sdp_three_receivers_exact_limit():
    assert solve_abc_sdp(2, [0.0] * 3).value == pytest.approx(float(an.v_n_exact(2, 3)), abs=1e-5)


def test_sandwich_random_problems():
    # dual certificate <= SDP primal, both close to the closed form
    rng = rng_from_seed(21)
    for i in range(50):
        d = 2 if i % 2 == 0 else 3
        e1, e2 = rng.uniform(0, an.eps_max(d), 2)
        lower = abc_dual_feasibility(d, e1, e2, abc_closed_certificate(d, e1, e2))["objective"]
        upper = solve_abc_sdp(d, [e1, e2]).value
        assert lower <= upper + 1e-6
        assert upper - lower <= 1e-5


def test_full_basis_agrees_with_commutant():
    eps = (0.1, 0.2)
    full = solve_abc_sdp(2, eps, basis="full").value
    comm = solve_abc_sdp(2, eps).value
    assert full == pytest.approx(comm, abs=1e-5)


def _check_abc_witness(w: SdpWitness, d: int, eps):
    assert w.j1.is_cp(1e-7) and w.j2.is_cp(1e-7)
    assert w.j1.is_tp(w.a, 1e-6) and w.j2.is_tp(w.b, 1e-6)
    assert w.a - w.b == pytest.approx(1, abs=1e-6)
    diff = w.j1 - w.j2
    for i, e in enumerate(eps):
        target = depolarizing_choi(d, an.eps_to_p(d, e)).entries
        np.testing.assert_allclose(diff.marginal(i).entries, target, atol=1e-6)


@pytest.mark.parametrize("d,eps", [(2, (0.2, 0.2)), (2, (0.0, 0.4)), (3, (0.1, 0.1))])
def test_abc_witness_is_valid(d, eps):
    res = solve_abc_sdp(d, eps)
    w = res.certificate
    _check_abc_witness(w, d, eps)
    assert w.a + w.b == pytest.approx(res.value, abs=1e-6)


def test_pbc_witness_marginals():
    res = solve_pbc_sdp(2, 3, 0.5)
    w = res.certificate
    diff = w.j1 - w.j2
    for i in range(3):
        np.testing.assert_allclose(diff.marginal(i).entries, 0.5 * umes(2).entries, atol=1e-6)
    assert w.j1.is_cp(1e-7) and w.j2.is_cp(1e-7)
    # trace-nonincreasing parts bounded by a and b
    assert w.j1.trace_scale() <= w.a + 1e-6
    assert w.j2.trace_scale() <= w.b + 1e-6
    assert w.a + w.b == pytest.approx(res.value, abs=1e-6)


def test_witness_json_round_trip(tmp_path):
    w = solve_abc_sdp(2, (0.2, 0.2)).certificate
    path = tmp_path / "w.json"
    path.write_text(json.dumps(w.to_json()))
    back = SdpWitness.from_json(json.loads(path.read_text()))
    assert back.kind == "abc" and back.n == 2
    assert back.a == w.a and back.value == w.value
    np.testing.assert_array_equal(back.j1.entries, w.j1.entries)


def test_witness_json_malformed():
    with pytest.raises(ArgumentError):
        SdpWitness.from_json({"kind": "abc"})


def test_builder_validation():
    with pytest.raises(ArgumentError):
        build_abc_primal_sdp(2, 3, [0.1, 0.1])
    with pytest.raises(ArgumentError):
        build_pbc_primal_sdp(2, 2, 0.5, basis="full")
    with pytest.raises(SizeError):
        build_pbc_primal_sdp(2, 5, 0.5)
    with pytest.raises(SizeError):
        build_abc_primal_sdp(3, 2, [0.1, 0.1], basis="full")


def test_builder_meta():
    prob = build_abc_primal_sdp(2, 2, [0.1, 0.2])
    assert prob.meta["kind"] == "abc" and prob.meta["eps"] == [0.1, 0.2]
    assert prob.blocks == (8, 8)
    prob = build_pbc_primal_sdp(2, 2, 0.5)
    assert prob.blocks == (8, 8, 1, 1) and len(prob.inequalities) == 3
