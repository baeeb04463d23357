import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import p2, swap, triv
from oracles import block_data, crossed_dim, groupoid_blocks
from partact.core import spectral_norm
from partact.corpus import random_system
from partact.fellbundle import envelope_bundles, make_triple, semidirect_bundle
from partact.paction import commutative_enveloping
from partact.repcross import (
    convolve, crossed_product, homomorphism_defect, inclusion_reduced, l2_inner, pi_lambda, random_section,
    reduced_algebra, regular_rep, right_multiply, star, verify_hereditary_triple,
)

seeds = st.integers(0, 2**31)


@pytest.mark.parametrize("make, dim, blocks", [(triv, 2, [1, 1]), (p2, 3, [1, 1, 1]), (swap, 4, [2])])
def test_crossed_product_fixtures(make, dim, blocks):
    alpha = make()
    R = crossed_product(alpha)
    assert (R.dim, R.blocks()) == (dim, blocks)
    assert blocks == groupoid_blocks(*block_data(alpha))
    assert R.report.ok


@given(seeds)
def test_crossed_product_matches_groupoid_oracle(seed):
    alpha = random_system(np.random.default_rng(seed), commutative=True).alpha
    R = crossed_product(alpha)
    assert R.dim == crossed_dim(alpha)
    assert R.blocks() == groupoid_blocks(*block_data(alpha))


@given(seeds)
def test_regular_representation_is_a_star_homomorphism(seed):
    rng = np.random.default_rng(seed)
    B = semidirect_bundle(random_system(rng, max_dim=4).alpha)
    assert homomorphism_defect(B, rng) < 1e-9
    f, g = random_section(B, rng), random_section(B, rng)
    assert np.allclose(regular_rep(convolve(f, g)), regular_rep(f) @ regular_rep(g))
    assert np.allclose(regular_rep(star(f)), regular_rep(f).conj().T)


@given(seeds)
def test_two_regular_representations_give_the_same_norm(seed):
    rng = np.random.default_rng(seed)
    B = semidirect_bundle(random_system(rng, max_dim=4).alpha)
    f = random_section(B, rng)
    assert abs(spectral_norm(regular_rep(f)) - spectral_norm(pi_lambda(f))) < 1e-9


def test_represented_bundle_gives_the_same_algebra():
    B = semidirect_bundle(p2())
    assert reduced_algebra(B.represented).blocks() == reduced_algebra(B).blocks()


def _triple(alpha):
    A, E, B = envelope_bundles(alpha, commutative_enveloping(alpha))
    return make_triple(A, E, B)


def test_p2_hereditary_triple():
    tr = _triple(p2())
    mw = verify_hereditary_triple(tr)
    assert mw.report.ok
    assert mw.dims == {"E": 4, "left": 3, "right": 6}
    inc = inclusion_reduced(tr.A)
    assert inc.report.ok and inc.image.dim == 3 and inc.parent.dim == 6


@given(seeds)
def test_hereditary_triple_on_random_commutative_systems(seed):
    tr = _triple(random_system(np.random.default_rng(seed), commutative=True).alpha)
    assert tr.report.ok and tr.full
    mw = verify_hereditary_triple(tr)
    assert mw.report.ok


@given(seeds)
def test_l2_module_identities(seed):
    rng = np.random.default_rng(seed)
    B = semidirect_bundle(random_system(rng, max_dim=4).alpha)
    x, y = random_section(B, rng), random_section(B, rng)
    b = B.random(B.G.e, rng)
    assert np.allclose(l2_inner(x, right_multiply(y, b)), B.mul(B.G.e, l2_inner(x, y), B.G.e, b))
    assert np.allclose(l2_inner(y, x), l2_inner(x, y).conj().T)
    ip = l2_inner(x, x)
    assert np.linalg.eigvalsh((ip + ip.conj().T) / 2).min() > -1e-10
