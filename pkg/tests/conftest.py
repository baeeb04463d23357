import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from partact.core import make_cyclic
from partact.fdalg import FdCStar, PartialIsoAlg, identity_iso
from partact.paction import PartialActionAlg, make_global, trivial_action

settings.register_profile(
    "repo", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")

Z2 = make_cyclic(2)


def triv():
    return trivial_action(Z2, FdCStar.commutative(1))


def p2():
    """Z2 on C^2 with D_g = first coordinate, alpha_g the identity there."""
    A = FdCStar.commutative(2)
    return PartialActionAlg(Z2, A, (frozenset(A.labels), frozenset({"b1"})), (identity_iso(A), identity_iso(A, ["b1"])))


def swap():
    A = FdCStar.commutative(2)
    return make_global(Z2, A, [identity_iso(A), PartialIsoAlg(A, A, {"b1": "b2", "b2": "b1"})])


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(params=["triv", "p2", "swap"])
def named_system(request):
    return request.param, {"triv": triv, "p2": p2, "swap": swap}[request.param]()
