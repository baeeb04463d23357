import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import p2, swap, triv
from oracles import block_data, ideal_dim, kernel_dim
from partact.core import Subspace, make_cyclic, unit_matrix
from partact.corpus import random_system
from partact.fellbundle import envelope_bundles, make_triple
from partact.morita import (
    Tring, TringPartialAction, adjoint_action, check_morita_equiv, compose_equivalences, derived_actions,
    envelope_unique_check, identity_equivalence, induced_spectrum_envelope, kernels_morita_triple, linking_algebra,
    morita_envelope, rieffel_lattice_check, tring_hom_right, tring_left_algebra, tring_right_algebra,
    validate_tring, validate_tring_action,
)
from partact.paction import DomainMap, commutative_enveloping

seeds = st.integers(0, 2**31)


def row_tring():
    """C^2 as 1 x 2 matrices: left algebra C, right algebra M_2."""
    return Tring.from_span([unit_matrix(2, 0, 0)[:1], unit_matrix(2, 0, 1)[:1]], 1, 2)


def test_row_tring():
    E = row_tring()
    assert (tring_left_algebra(E).dim, tring_right_algebra(E).dim) == (1, 4)
    assert validate_tring(E).ok
    assert linking_algebra(E).algebra.dim == 9 and linking_algebra(E).report.ok
    assert rieffel_lattice_check(E).ok


def test_non_tring_is_caught():
    # upper triangular 2 x 2 matrices are not closed under x y* z
    E = Tring.from_span([unit_matrix(2, 0, 0), unit_matrix(2, 0, 1), unit_matrix(2, 1, 1)], 2, 2)
    assert not validate_tring(E).ok


def test_tring_hom_induces_right_map():
    E = row_tring()
    hom = tring_hom_right(E, E, list(E.elements))
    assert hom.report.ok
    a = tring_right_algebra(E).random_element(np.random.default_rng(1))
    assert np.allclose(hom.apply(a), a)


def test_compose_row_and_column():
    G1 = make_cyclic(1)
    E = row_tring()
    F = Tring.from_span([e.T for e in E.elements], 2, 1)
    g1 = TringPartialAction(G1, E, (E.space,), (DomainMap(E.space.basis, E.space.basis),))
    g2 = TringPartialAction(G1, F, (F.space,), (DomainMap(F.space.basis, F.space.basis),))
    c = compose_equivalences(g1, g2)
    assert c.report.ok and c.action.E.dim == 1


@pytest.mark.parametrize("make", [triv, p2, swap])
def test_identity_equivalence(make):
    alpha = make()
    gamma = identity_equivalence(alpha)
    assert validate_tring_action(gamma).ok
    assert check_morita_equiv(alpha, alpha, gamma).ok
    assert validate_tring_action(adjoint_action(gamma)).ok


@pytest.mark.parametrize("make, dims", [
    (triv, {"dim_k": 4, "dim_I": 4, "dim_E": 2}),
    (p2, {"dim_k": 6, "dim_I": 5, "dim_E": 3}),
    (swap, {"dim_k": 8, "dim_I": 8, "dim_E": 4}),
])
def test_morita_envelope_fixtures(make, dims):
    env = morita_envelope(make())
    assert env.dims == dims
    assert env.report.ok


@given(seeds)
def test_morita_envelope_on_random_systems(seed):
    alpha = random_system(np.random.default_rng(seed), max_dim=4).alpha
    env = morita_envelope(alpha)
    assert env.report.ok
    assert env.dims["dim_k"] == kernel_dim(alpha)
    assert env.dims["dim_I"] == ideal_dim(alpha)
    der = derived_actions(env.gamma)
    assert der.report.ok


@pytest.mark.parametrize("make", [triv, p2, swap])
def test_envelope_uniqueness_through_a_global_equivalence(make):
    ge = envelope_unique_check(make())
    assert ge.report.ok


@given(seeds)
def test_induced_spectrum(seed):
    alpha = random_system(np.random.default_rng(seed)).alpha
    iso = induced_spectrum_envelope(alpha)
    assert iso.report.ok


def test_kernels_of_the_p2_triple():
    alpha = p2()
    A, E, B = envelope_bundles(alpha, commutative_enveloping(alpha))
    kt = kernels_morita_triple(make_triple(A, E, B))
    assert kt.dims == {"k(A)": 6, "k(E)": 8, "k(B)": 12}
    assert kt.full and kt.report.ok


def test_p2_spectrum_points_match_the_envelope():
    iso = induced_spectrum_envelope(p2())
    G, pts, D, M = block_data(p2())
    assert len(iso.mapping) == 3 and sorted(iso.mapping.values()) == [0, 1, 2]


def test_zero_domains_allowed():
    E = row_tring()
    Z = Subspace.zero(2)
    G = make_cyclic(2)
    gamma = TringPartialAction(G, E, (E.space, Z), (DomainMap(E.space.basis, E.space.basis),
                                                    DomainMap(Z.basis, np.zeros((0, 2)))))
    assert validate_tring_action(gamma).ok
