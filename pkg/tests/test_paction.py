import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import Z2, p2, swap, triv
from oracles import block_data, envelope_gset
from partact.core import Subspace, random_unitary, small_groups
from partact.corpus import random_global, random_system
from partact.fdalg import FdCStar, PartialIsoAlg, identity_iso
from partact.paction import (
    PartialActionAlg, check_enveloping, commutative_enveloping, conjugate_witness, domain_map_from_pairs,
    envelope_by_orbit, enveloping_iso, find_isomorphism, function_envelope, global_part, make_global, restrict,
    to_block_form, to_linear, trivial_action, validate_alg, validate_linear,
)

seeds = st.integers(0, 2**31)


def test_p2_envelope_is_c3_with_a_transposition():
    w = commutative_enveloping(p2())
    assert w.B.sizes == (1, 1, 1)
    sigma = w.beta.maps[1].sigma
    fixed = [b for b in w.B.labels if sigma[b] == b]
    moved = [b for b in w.B.labels if sigma[b] != b]
    # beta_g = (2 3): one fixed point, the image of the domain D_g
    assert fixed == [w.embed.sigma["b1"]] and len(moved) == 2
    assert w.embed.sigma["b2"] in moved
    assert check_enveloping(p2(), w).ok


def test_builtin_systems_validate(named_system):
    _, alpha = named_system
    assert validate_alg(alpha).ok
    assert validate_linear(to_linear(alpha)).ok


def test_broken_domain_is_reported():
    A = FdCStar.commutative(2)
    bad = PartialActionAlg(Z2, A, (frozenset(A.labels), frozenset({"b1"})),
                           (identity_iso(A), PartialIsoAlg(A, A, {"b2": "b1"})))
    assert not validate_alg(bad).ok


def test_global_part():
    assert global_part(p2()) == frozenset({0})
    assert global_part(swap()) == frozenset({0, 1})


def test_restrict_needs_a_global_action():
    with pytest.raises(ValueError):
        restrict(p2(), ["b1"])


def test_two_witnesses_for_p2_agree():
    alpha = p2()
    B3 = FdCStar.commutative(3)
    beta = make_global(Z2, B3, [identity_iso(B3), PartialIsoAlg(B3, B3, {"b1": "b1", "b2": "b3", "b3": "b2"})])
    alpha2, w2 = envelope_by_orbit(beta, ["b1", "b2"])
    assert alpha2.domains == alpha.domains
    iso = enveloping_iso(alpha, commutative_enveloping(alpha), w2)
    assert iso.report.ok
    assert sorted(iso.block_permutation().values()) == ["b1", "b2", "b3"]


def test_bad_witness_is_rejected():
    B3 = FdCStar.commutative(3)
    beta = make_global(Z2, B3, [identity_iso(B3), PartialIsoAlg(B3, B3, {"b1": "b1", "b2": "b3", "b3": "b2"})])
    _, w = envelope_by_orbit(beta, ["b1", "b2"])
    wrong = type(w)(w.B, w.beta, PartialIsoAlg(p2().A, w.B, {"b1": "b2", "b2": "b1"}))
    assert not check_enveloping(p2(), wrong).ok
    with pytest.raises(ValueError):
        enveloping_iso(p2(), wrong, w)


@given(seeds)
def test_orbit_envelopes_of_random_systems(seed):
    c = random_system(np.random.default_rng(seed))
    assert validate_alg(c.alpha).ok
    assert check_enveloping(c.alpha, c.witness).ok


@given(seeds)
def test_envelope_uniqueness_commutative(seed):
    c = random_system(np.random.default_rng(seed), commutative=True)
    a = c.alpha
    w1, (w2, _) = commutative_enveloping(a), function_envelope(a)
    iso = enveloping_iso(a, w1, w2)
    assert iso.report.ok and iso.report.max_residual() <= 1e-8
    # the envelope has as many blocks as the independently globalized block set
    G, pts, D, M = block_data(a)
    assert len(w1.B.labels) == len(envelope_gset(G, pts, D, M)[0])


@given(seeds)
def test_uniqueness_against_a_transported_witness(seed):
    rng = np.random.default_rng(seed)
    c = random_system(rng)
    w = c.witness
    labels = list(w.B.labels)
    perm = dict(zip(labels, [f"x{i}" for i in rng.permutation(len(labels))]))
    us = {b: random_unitary(rng, w.B.size(b)) for b in labels}
    w2 = conjugate_witness(w, perm, us)
    iso = enveloping_iso(c.alpha, w, w2)
    assert iso.report.ok
    assert iso.block_permutation() == perm


@given(seeds)
def test_function_envelope_is_enveloping(seed):
    c = random_system(np.random.default_rng(seed), max_dim=5)
    w, fe = function_envelope(c.alpha)
    assert fe.report.ok
    assert check_enveloping(c.alpha, w).ok
    assert w.B.dim == c.witness.B.dim


@given(seeds)
def test_block_form_round_trip(seed):
    c = random_system(np.random.default_rng(seed), max_dim=5)
    bf, _ = to_block_form(to_linear(c.alpha))
    assert validate_alg(bf).ok
    assert find_isomorphism(c.alpha, bf) is not None


def test_inner_action_is_not_trivial():
    M = FdCStar.from_sizes([2])
    inner = make_global(Z2, M, [identity_iso(M), PartialIsoAlg(M, M, {"b1": "b1"}, {"b1": np.diag([1, -1])})])
    bf, _ = to_block_form(to_linear(inner))
    assert find_isomorphism(inner, bf) is not None
    # as actions they differ, although both are conjugation on M_2
    assert find_isomorphism(inner, trivial_action(Z2, M)) is None


@pytest.mark.parametrize("G", small_groups(4), ids=lambda g: f"order{g.order}")
def test_random_global_is_global_and_valid(G):
    beta = random_global(G, np.random.default_rng(G.order))
    assert beta.is_global() and validate_alg(beta).ok


def test_domain_map_flags_ill_defined_pairs():
    D = Subspace.span(np.eye(3)[:2], 3)
    x = np.array([1.0, 0, 0])
    _, ok = domain_map_from_pairs(D, [x, 2 * x], [x, x])
    assert not ok
    _, ok = domain_map_from_pairs(D, [x, np.array([0, 1.0, 0])], [x, x])
    assert ok
    _, ok = domain_map_from_pairs(D, [np.array([0, 0, 1.0])], [x])
    assert not ok


def test_json_round_trip(named_system):
    _, alpha = named_system
    back = PartialActionAlg.from_json(alpha.to_json())
    assert find_isomorphism(alpha, back) is not None and back.domains == alpha.domains


def test_triv_has_no_proper_domains():
    assert triv().is_global() and not p2().is_global()
