import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import p2, swap, triv
from oracles import ideal_dim
from partact.corpus import load, random_system
from partact.fellbundle import (
    RepresentedBundle, SubBundle, envelope_bundles, is_saturated, make_triple, product_span_dim, represent,
    semidirect_bundle, table_from_bundle, validate_bundle,
)
from partact.paction import commutative_enveloping

seeds = st.integers(0, 2**31)


@pytest.mark.parametrize("make, dims, saturated", [(triv, [1, 1], True), (p2, [2, 1], False), (swap, [2, 2], True)])
def test_builtin_bundles(make, dims, saturated):
    B = semidirect_bundle(make())
    assert B.fiber_dims() == dims
    assert is_saturated(B) is saturated
    for X in (B, B.represented, table_from_bundle(B)):
        assert validate_bundle(X).ok


def test_p2_product_of_g_fibers_is_a_proper_ideal():
    B = semidirect_bundle(p2())
    assert product_span_dim(B, 1, 1) == 1 < B.fiber_dim(0)


def test_corrupted_multiplication_table_fails_associativity():
    T = table_from_bundle(semidirect_bundle(swap()))
    T.mult[(1, 1)] = T.mult[(1, 1)] * np.array([1, 2])[None, None, :]
    assert not validate_bundle(T).ok


@given(seeds)
def test_semidirect_bundles_satisfy_the_axioms(seed):
    alpha = random_system(np.random.default_rng(seed), max_dim=4).alpha
    B = semidirect_bundle(alpha)
    assert validate_bundle(B).ok
    assert B.total_dim() == sum(alpha.D(t).dim for t in alpha.G)
    # saturation is fiberwise B_r B_s = B_rs, equivalently D_r & D_rs = D_rs
    G = alpha.G
    sat = all(set(alpha.domains[G.mul(r, s)]) <= set(alpha.domains[r]) for r in G for s in G)
    assert is_saturated(B) == sat
    assert sat == (ideal_dim(alpha) == G.order * B.total_dim())


@given(seeds)
def test_representation_is_faithful_and_multiplicative(seed):
    B = semidirect_bundle(random_system(np.random.default_rng(seed), max_dim=4).alpha)
    R = represent(B)
    assert R.fiber_dims() == B.fiber_dims()
    assert validate_bundle(R).ok


def test_represented_bundle_json_round_trip():
    R = semidirect_bundle(p2()).represented
    back = RepresentedBundle.from_json(R.to_json())
    assert back.fiber_dims() == R.fiber_dims() and validate_bundle(back).ok


def test_envelope_triple_of_p2():
    alpha = p2()
    A, E, B = envelope_bundles(alpha, commutative_enveloping(alpha))
    tr = make_triple(A, E, B)
    assert tr.report.ok and tr.full
    assert A.fiber_dims() == [2, 1] and E.fiber_dims() == [2, 2]


def test_trivial_triple_is_not_full():
    alpha = p2()
    _, _, B = envelope_bundles(alpha, commutative_enveloping(alpha))
    tr = make_triple(SubBundle.trivial(B), SubBundle.trivial(B), B)
    assert tr.report.ok and not tr.full


def test_bundle_document_loads(tmp_path):
    path = tmp_path / "p2-bundle.json"
    path.write_text(json.dumps(semidirect_bundle(p2()).represented.to_json()))
    R, doc = load(str(path))
    assert doc["kind"] == "bundle" and R.fiber_dims() == [2, 1]
