import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import p2, swap, triv
from oracles import kernel_dim
from partact.corpus import random_system
from partact.fellbundle import represent, semidirect_bundle
from partact.takai import coaction_crossed, takai_iso


@pytest.mark.parametrize("make, dim", [(triv, 4), (p2, 6), (swap, 8)])
def test_fixtures(make, dim):
    iso = takai_iso(semidirect_bundle(make()))
    assert iso.report.ok
    assert iso.crossed.dim == iso.kernels.dim == dim
    assert iso.sigma_defect < 1e-8 and iso.equivariance_defect < 1e-8


@pytest.mark.parametrize("make", [triv, p2, swap])
def test_represented_bundle(make):
    B = represent(semidirect_bundle(make()))
    iso = takai_iso(B)
    assert iso.report.ok
    assert coaction_crossed(B).dim == kernel_dim(make())


@given(st.integers(0, 2**31))
def test_random_systems(seed):
    a = random_system(np.random.default_rng(seed), max_dim=4).alpha
    iso = takai_iso(semidirect_bundle(a), np.random.default_rng(seed))
    assert iso.report.ok
    assert iso.crossed.dim == kernel_dim(a)


def test_dual_action_is_an_action():
    B = semidirect_bundle(p2())
    cc = coaction_crossed(B)
    G = B.G
    x = cc.algebra.random_element(np.random.default_rng(0))
    for s in G:
        for t in G:
            assert np.allclose(cc.dual_action(s, cc.dual_action(t, x)), cc.dual_action(G.mul(s, t), x))
