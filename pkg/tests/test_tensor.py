from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vbcast.errors import ArgumentError, NumericError, SizeError
from vbcast.permutations import haar_unitary, rng_from_seed
from vbcast.tensor import (
    ChoiOperator,
    MultipartiteOperator,
    apply_channel,
    average_broadcast_fidelity,
    broadcast_fidelity,
    channel_fidelity,
    choi_from_kraus,
    depolarizing_choi,
    embed,
    hermitian_eigenvalues,
    identity,
    identity_choi,
    kron,
    kron_all,
    link_product,
    mes,
    operator,
    partial_trace,
    partial_transpose,
    permute_subsystems,
    umes,
)


def rand_op(dims, rng):
    n = int(np.prod(dims))
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return MultipartiteOperator(a, tuple(dims))


def rand_density(d, rng):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


# construction


def test_dims_must_match_entries():
    with pytest.raises(ArgumentError):
        MultipartiteOperator(np.eye(4), (2, 3))


def test_labels_must_be_distinct():
    with pytest.raises(ArgumentError):
        MultipartiteOperator(np.eye(4), (2, 2), ("A", "A"))


def test_entries_are_read_only():
    op = identity([2, 2])
    with pytest.raises(ValueError):
        op.entries[0, 0] = 5


def test_json_round_trip():
    rng = rng_from_seed(1)
    op = rand_op((2, 3), rng).with_labels(("A", "B"))
    back = MultipartiteOperator.from_json(op.to_json())
    assert back.dims == op.dims and back.labels == op.labels
    np.testing.assert_array_equal(back.entries, op.entries)


def test_malformed_json():
    with pytest.raises(ArgumentError):
        MultipartiteOperator.from_json({"re": [[1.0]]})


def test_kron_size_cap():
    with pytest.raises(SizeError):
        kron(identity(8), identity(8), cap=32)


# partial trace / transpose


def test_partial_trace_of_product():
    rng = rng_from_seed(2)
    a, b = rand_op((2,), rng), rand_op((3,), rng)
    ab = kron(a, b)
    np.testing.assert_allclose(partial_trace(ab, 1).entries, a.entries * np.trace(b.entries))
    np.testing.assert_allclose(partial_trace(ab, 0).entries, b.entries * np.trace(a.entries))


def test_trace_everything_gives_scalar():
    op = identity([2, 3])
    out = partial_trace(op, [0, 1])
    assert out.entries.shape == (1, 1)
    assert out.entries[0, 0] == pytest.approx(6)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_partial_trace_preserves_trace(seed):
    rng = rng_from_seed(seed)
    op = rand_op((2, 3, 2), rng)
    for sub in ([0], [1], [0, 2]):
        assert partial_trace(op, sub).trace() == pytest.approx(op.trace())


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_partial_transpose_involution(seed):
    rng = rng_from_seed(seed)
    op = rand_op((2, 3), rng)
    twice = partial_transpose(partial_transpose(op, 1), 1)
    np.testing.assert_allclose(twice.entries, op.entries)
    full = partial_transpose(partial_transpose(op, 0), 1)
    np.testing.assert_allclose(full.entries, op.entries.T)


def test_partial_transpose_of_gamma_is_swap():
    d = 3
    swap = np.eye(d * d).reshape(d, d, d, d).transpose(1, 0, 2, 3).reshape(d * d, d * d)
    np.testing.assert_allclose(partial_transpose(umes(d), 1).entries, swap)


# permutations of subsystems and embedding


def test_permute_subsystems_matches_kron_order():
    rng = rng_from_seed(3)
    a, b, c = rand_op((2,), rng), rand_op((3,), rng), rand_op((2,), rng)
    abc = kron_all([a, b, c])
    cab = permute_subsystems(abc, [2, 0, 1])
    np.testing.assert_allclose(cab.entries, kron_all([c, a, b]).entries)
    assert cab.dims == (2, 2, 3)


def test_permute_rejects_non_permutation():
    with pytest.raises(ArgumentError):
        permute_subsystems(identity([2, 2]), [0, 0])


def test_embed_places_local_operator():
    rng = rng_from_seed(4)
    a = rand_op((2,), rng)
    out = embed(a, [1], (3, 2, 2))
    np.testing.assert_allclose(out.entries, kron_all([identity(3), a, identity(2)]).entries)


def test_embed_gamma_on_outer_systems():
    d = 2
    g = embed(umes(d), [0, 2], (d, d, d))
    # Gamma_AC x 1_B via explicit index construction
    ref = np.zeros((d,) * 6)
    for i in range(d):
        for j in range(d):
            for b in range(d):
                ref[i, b, i, j, b, j] = 1
    np.testing.assert_allclose(g.entries, ref.reshape(d**3, d**3))


# link product


def test_link_product_reproduces_channel_action():
    rng = rng_from_seed(5)
    d = 2
    chan = depolarizing_choi(d, 0.3)
    rho = rand_density(d, rng)
    r = MultipartiteOperator(rho, (d,), ("A",))
    # rho * J = Tr_A[(rho^T x 1) J] = E(rho)
    out = link_product(r, chan.op)
    np.testing.assert_allclose(out.entries, apply_channel(chan, rho).entries, atol=1e-12)


def test_link_product_composes_channels():
    rng = rng_from_seed(6)
    d = 2
    u, v = haar_unitary(d, rng), haar_unitary(d, rng)
    ju = choi_from_kraus([u]).op.with_labels(("A", "B"))
    jv = choi_from_kraus([v]).op.with_labels(("B", "C"))
    comp = link_product(ju, jv)
    expect = choi_from_kraus([v @ u]).entries
    np.testing.assert_allclose(comp.entries, expect, atol=1e-12)
    assert comp.labels == ("A", "C")


def test_link_product_full_contraction_is_scalar():
    d = 3
    a = umes(d, ("A", "B"))
    out = link_product(a, a)
    # Tr[Gamma Gamma^T] = d^2
    assert out.entries.shape == (1, 1)
    assert out.entries[0, 0] == pytest.approx(d * d)


def test_link_product_needs_labels():
    with pytest.raises(ArgumentError):
        link_product(identity(2), identity(2))


def test_link_product_dimension_mismatch():
    with pytest.raises(ArgumentError):
        link_product(identity([2], ("A",)), identity([3], ("A",)))


# eigenvalues


def test_hermitian_eigenvalues_sorted():
    vals = hermitian_eigenvalues(operator(np.diag([3.0, -1.0, 2.0])))
    np.testing.assert_allclose(vals, [-1, 2, 3])


def test_hermitian_eigenvalues_rejects_non_hermitian():
    with pytest.raises(NumericError):
        hermitian_eigenvalues(np.array([[0, 1], [0, 0]]))


@pytest.mark.parametrize("d", [2, 3, 5])
def test_gamma_spectrum(d):
    vals = hermitian_eigenvalues(umes(d))
    assert vals[-1] == pytest.approx(d)
    np.testing.assert_allclose(vals[:-1], 0, atol=1e-12)
    assert mes(d).trace() == pytest.approx(1)


# Choi operators


@pytest.mark.parametrize("d", [2, 3, 4])
def test_identity_choi_is_cptp(d):
    j = identity_choi(d)
    assert j.is_cp() and j.is_tp()
    assert channel_fidelity(j) == pytest.approx(1)


@pytest.mark.parametrize("d,p", [(2, 0.0), (2, 0.5), (2, 4 / 3), (3, 0.2), (5, 1.0)])
def test_depolarizing_fidelity_formula(d, p):
    j = depolarizing_choi(d, p)
    assert j.is_tp()
    assert channel_fidelity(j) == pytest.approx(1 - (1 - 1 / d**2) * p)
    # CP exactly on the stated range
    assert j.is_cp()


def test_depolarizing_out_of_range():
    with pytest.raises(ArgumentError):
        depolarizing_choi(2, 1.5)


@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3]), st.integers(1, 4))
@settings(max_examples=20, deadline=None)
def test_kraus_channels_are_cptp(seed, d, r):
    rng = rng_from_seed(seed)
    u = haar_unitary(d * r, rng)[:, :d]
    j = choi_from_kraus([u[i * d:(i + 1) * d] for i in range(r)])
    assert j.is_cp() and j.is_tp(tol=1e-10)
    rho = rand_density(d, rng)
    out = apply_channel(j, rho)
    assert out.trace() == pytest.approx(1)
    assert hermitian_eigenvalues(out, 1e-9)[0] > -1e-10


def test_marginal_of_product_broadcast():
    d = 2
    j1 = depolarizing_choi(d, 0.2)
    # second receiver gets the maximally mixed state regardless of input
    big = embed(j1.op, [0, 1], (d, d, d)).entries / d
    choi = ChoiOperator.from_matrix(big, d, 2)
    marg = choi.marginal(0)
    np.testing.assert_allclose(marg.entries, j1.entries, atol=1e-12)
    assert broadcast_fidelity(choi, 0) == pytest.approx(channel_fidelity(j1))
    assert broadcast_fidelity(choi, 1) == pytest.approx(1 / d**2)
    assert average_broadcast_fidelity(choi) == pytest.approx((channel_fidelity(j1) + 1 / d**2) / 2)


def test_marginal_out_of_range():
    choi = ChoiOperator.from_matrix(np.eye(8) / 2, 2, 2)
    with pytest.raises(ArgumentError):
        choi.marginal(2)


def test_canonical_reorders_input_first():
    j = depolarizing_choi(2, 0.3)
    swapped = ChoiOperator(permute_subsystems(j.op, [1, 0]), 1, (0,))
    np.testing.assert_allclose(swapped.canonical().entries, j.entries)
    assert channel_fidelity(swapped) == pytest.approx(channel_fidelity(j))


def test_choi_json_round_trip():
    j = depolarizing_choi(3, 0.4)
    back = ChoiOperator.from_json(j.to_json())
    np.testing.assert_allclose(back.entries, j.entries)
    assert back.output_indices == j.output_indices


def test_trace_scale_and_defect():
    j = depolarizing_choi(2, 0.4)
    scaled = ChoiOperator(j.op * 2.5, 0, (1,))
    assert scaled.trace_scale() == pytest.approx(2.5)
    assert scaled.is_proportional_tp()
    assert not scaled.is_tp()


def test_more_than_two_outputs_json():
    choi = ChoiOperator.from_matrix(np.eye(16) / 4, 2, 3)
    assert choi.n_outputs == 3
    assert choi.op.labels == ("A", "B1", "B2", "B3")
    back = ChoiOperator.from_json(choi.op.to_json())
    assert back.n_outputs == 3
