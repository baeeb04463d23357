import numpy as np
import pytest
from hypothesis import given, strategies as st

from partact.fdalg import (
    FdCStar, PartialIsoAlg, action_defect, compose_partial_iso, extends, identity_iso, ideal_of_blocks,
    norm_defect, random_partial_iso,
)


def test_dimensions():
    A = FdCStar.from_sizes([2, 1, 3])
    assert A.dim == 14 and A.hdim == 6
    assert not A.is_commutative() and FdCStar.commutative(3).is_commutative()


@pytest.mark.parametrize("labels, sizes", [(("a", "a"), (1, 1)), (("a",), (0,)), (("a", "b"), (1,))])
def test_bad_algebras_rejected(labels, sizes):
    with pytest.raises(ValueError):
        FdCStar(labels, sizes)


def test_unknown_labels_rejected():
    with pytest.raises(KeyError):
        FdCStar.commutative(2).check_labels(["zz"])


def test_size_mismatch_rejected():
    A = FdCStar.from_sizes([1, 2])
    with pytest.raises(ValueError):
        PartialIsoAlg(A, A, {"b1": "b2"})


def test_ideal_lattice_is_exact():
    A = FdCStar.from_sizes([1, 2, 1])
    I, J = ideal_of_blocks(A, ["b1", "b2"]), ideal_of_blocks(A, ["b2", "b3"])
    assert I.meet(J).labels == ["b2"] and I.join(J).dim == A.dim
    assert I.meet(J).le(I)
    P = I.projection
    assert np.allclose(P @ P, P)


def test_coords_round_trip():
    A = FdCStar.from_sizes([2, 1])
    a = A.random_element(np.random.default_rng(0))
    assert np.allclose(A.from_coords(A.coords(a)), a)
    assert A.off_block_defect(a) == 0


@given(st.integers(0, 2**31))
def test_partial_iso_is_a_star_homomorphism(seed):
    rng = np.random.default_rng(seed)
    A = FdCStar.from_sizes([2, 2, 1])
    phi = random_partial_iso(A, rng, {"b1": "b2", "b3": "b3"})
    a, b = A.random_element(rng, phi.sigma), A.random_element(rng, phi.sigma)
    assert np.allclose(phi(a @ b), phi(a) @ phi(b))
    assert np.allclose(phi(a.conj().T), phi(a).conj().T)
    assert norm_defect(phi, rng) < 1e-9
    assert action_defect(compose_partial_iso(phi.inverse(), phi), identity_iso(A, phi.sigma), phi.sigma) < 1e-9


def test_restriction_is_extended_by_the_original():
    rng = np.random.default_rng(2)
    A = FdCStar.from_sizes([2, 1])
    phi = random_partial_iso(A, rng, {"b1": "b1", "b2": "b2"})
    assert extends(phi, phi.restrict(["b1"]))
    assert not extends(phi.restrict(["b1"]), phi)


def test_unitaries_matter_only_up_to_phase():
    A = FdCStar.from_sizes([2])
    U = np.diag([1, 1j])
    phi, psi = PartialIsoAlg(A, A, {"b1": "b1"}, {"b1": U}), PartialIsoAlg(A, A, {"b1": "b1"}, {"b1": 1j * U})
    assert action_defect(phi, psi, ["b1"]) < 1e-12


def test_json_round_trip():
    rng = np.random.default_rng(5)
    A = FdCStar.from_sizes([2, 1])
    phi = random_partial_iso(A, rng, {"b1": "b1"})
    back = PartialIsoAlg.from_json(A, phi.to_json())
    assert action_defect(phi, back, ["b1"]) < 1e-12
    assert FdCStar.from_json(A.to_json()) == A
