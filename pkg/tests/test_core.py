import numpy as np
import pytest
from hypothesis import given, strategies as st

from partact.core import (
    FiniteGroup, Subspace, center, default_tol, direct_product, fd_model, make_cyclic, make_klein,
    make_symmetric3, pair_products, random_unitary, rank, regular_reps, small_groups, spectral_norm,
    star_algebra_closure, unit_matrix, wedderburn,
)

GROUPS = small_groups(4) + [make_symmetric3()]


@pytest.mark.parametrize("G", GROUPS, ids=lambda g: f"order{g.order}")
def test_group_axioms(G):
    for a in G:
        assert G.mul(a, G.e) == a == G.mul(G.e, a)
        assert G.mul(a, G.inv(a)) == G.e
        for b in G:
            for c in G:
                assert G.mul(G.mul(a, b), c) == G.mul(a, G.mul(b, c))


def test_small_groups_are_the_expected_ones():
    assert sorted(g.order for g in small_groups(4)) == [1, 2, 3, 4, 4]
    assert not make_symmetric3().is_abelian()
    assert make_klein().is_abelian()


def test_cyclic_rejects_zero():
    with pytest.raises(ValueError):
        make_cyclic(0)


def test_group_json_round_trip():
    G = direct_product(make_cyclic(2), make_cyclic(3))
    H = FiniteGroup.from_json(G.to_json())
    assert H.elements == G.elements and H.table == G.table


@pytest.mark.parametrize("G", GROUPS, ids=lambda g: f"order{g.order}")
def test_regular_reps_are_commuting_homomorphisms(G):
    lam, rho = regular_reps(G)
    for s in G:
        for t in G:
            assert np.allclose(lam[s] @ lam[t], lam[G.mul(s, t)])
            assert np.allclose(rho[s] @ rho[t], rho[G.mul(s, t)])
            assert np.allclose(lam[s] @ rho[t], rho[t] @ lam[s])


def test_subgroups_of_klein():
    assert len(make_klein().subgroups()) == 5


def test_pair_products():
    rng = np.random.default_rng(1)
    A, B = rng.standard_normal((3, 2, 4)), rng.standard_normal((2, 4, 2))
    P = pair_products(A, B)
    assert np.allclose(P[2, 1], A[2] @ B[1])


@given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 2**31))
def test_span_dimension_equals_rank(n, k, seed):
    rng = np.random.default_rng(seed)
    r = min(k, n)
    V = rng.standard_normal((k, r)) @ rng.standard_normal((r, n)) if k else np.zeros((0, n))
    S = Subspace.span(V, n)
    assert S.dim == (np.linalg.matrix_rank(V) if k else 0)
    assert all(S.contains(v) for v in V)
    if S.dim:
        assert np.allclose(S.basis @ np.conj(S.basis).T, np.eye(S.dim))


@given(st.integers(2, 6), st.integers(0, 2**31))
def test_meet_matches_dimension_formula(n, seed):
    rng = np.random.default_rng(seed)
    A = Subspace.span(rng.standard_normal((rng.integers(1, n), n)), n)
    B = Subspace.span(rng.standard_normal((rng.integers(1, n), n)), n)
    assert A.meet(B).dim == A.dim + B.dim - A.plus(B).dim
    assert A.meet(B).le(A) and A.meet(B).le(B)


def test_span_is_scale_invariant():
    v = np.array([[1e-6, 0, 0], [0, 1e-6, 0]])
    assert Subspace.span(v, 3).dim == 2


def test_default_tol_reads_environment(monkeypatch):
    monkeypatch.setenv("PARTACT_TOL", "1e-5")
    assert default_tol() == 1e-5
    monkeypatch.delenv("PARTACT_TOL")
    assert default_tol() == 1e-9


def test_spectral_norm_of_unitary_is_one():
    U = random_unitary(np.random.default_rng(3), 4)
    assert abs(spectral_norm(U) - 1) < 1e-12
    assert rank(U) == 4


def test_closure_of_matrix_units_is_full():
    A = star_algebra_closure([unit_matrix(2, 0, 0), unit_matrix(2, 0, 1)])
    assert A.dim == 4 and A.is_unital
    assert wedderburn(A).blocks == [2]


def _conjugated_direct_sum(sizes, mults, seed):
    """U (M_{n1} (x) 1_{m1} + ...) U* generated by conjugated matrix units."""
    rng = np.random.default_rng(seed)
    total = sum(n * m for n, m in zip(sizes, mults))
    U = random_unitary(rng, total)
    gens, off = [], 0
    for n, m in zip(sizes, mults):
        for i in range(n):
            for j in range(n):
                E = np.zeros((total, total), complex)
                E[off:off + n * m, off:off + n * m] = np.kron(unit_matrix(n, i, j), np.eye(m))
                gens.append(U @ E @ U.conj().T)
        off += n * m
    return star_algebra_closure(gens)


@given(st.lists(st.tuples(st.integers(1, 2), st.integers(1, 2)), min_size=1, max_size=3), st.integers(0, 2**31))
def test_wedderburn_recovers_block_structure(summands, seed):
    sizes, mults = [s for s, _ in summands], [m for _, m in summands]
    A = _conjugated_direct_sum(sizes, mults, seed)
    W = wedderburn(A)
    assert A.dim == sum(n * n for n in sizes)
    assert W.sorted_blocks == sorted(sizes)
    assert not W.diagnostics
    assert center(A).dim == len(sizes)


def test_fd_model_is_multiplicative():
    rng = np.random.default_rng(4)
    A = _conjugated_direct_sum([2, 1], [2, 1], 9)
    m = fd_model(A)
    x, y = A.random_element(rng), A.random_element(rng)
    for bx, by, bxy in zip(m.to_blocks(x), m.to_blocks(y), m.to_blocks(x @ y)):
        assert np.abs(bx @ by - bxy).max() < 1e-9
    assert np.abs(m.from_blocks(m.to_blocks(x)) - x).max() < 1e-9


def test_closure_defect_small_on_closed_algebra():
    A = _conjugated_direct_sum([2], [1], 2)
    assert A.closure_defect() < 1e-9
