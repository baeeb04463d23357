"""Dual coaction, coaction crossed product and the Takai isomorphism.

delta(f) = sum_t Lambda(f(t) delta_t) (x) lambda_t on (carrier of Lambda) (x) l2(G).
The coaction crossed product is span{delta(f)(1 (x) M_phi)} with M_phi the
multiplication operator of phi in C(G). The dual action sends
delta(f)(1 (x) M_phi) to delta(f)(1 (x) M_phi_t) with phi_t(s) = phi(st); it is
also conjugation by 1 (x) rho_t, and both forms are compared.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .core import MatrixStarAlgebra, Report, Subspace, adjoint, rank, regular_reps, star_algebra_closure, wedderburn
from .fellbundle import FellBundle
from .kernels import (
    Kernel, KernelAlgebra, k_mul, k_star, kernel_algebra, kernel_from_coords, natural_action, pi_c, random_kernel,
)
from .paction import linear_map_from_pairs
from .repcross import Section, point_section, random_section, regular_rep, uses_induced_carrier


def dual_coaction(f: Section) -> np.ndarray:
    B = f.bundle
    lam, _ = regular_reps(B.G)
    return sum(np.kron(regular_rep(point_section(B, t, f(t))), lam[t]) for t in B.G)


def multiplication(phi: np.ndarray) -> np.ndarray:
    return np.diag(np.asarray(phi, dtype=complex))


def translate(G, phi: np.ndarray, t: int) -> np.ndarray:
    """phi_t(s) = phi(st)."""
    return np.array([phi[G.mul(s, t)] for s in G])


@dataclass(eq=False)
class CoactionCrossed:
    bundle: FellBundle
    algebra: MatrixStarAlgebra
    carrier: int            # dimension of the Lambda carrier

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def one_tensor(self, m: np.ndarray) -> np.ndarray:
        return np.kron(np.eye(self.carrier), m)

    def dual_action(self, t: int, x: np.ndarray) -> np.ndarray:
        _, rho = regular_reps(self.bundle.G)
        R = self.one_tensor(rho[t])
        return R @ x @ adjoint(R)


def _spanning_family(B: FellBundle):
    """(phi, f) with phi a point mass and f a point section of a basis vector."""
    G = B.G
    for s0 in G:
        phi = np.zeros(G.order)
        phi[s0] = 1.0
        for u in G:
            for x in B.basis(u):
                yield phi, point_section(B, u, x)


def coaction_crossed(B: FellBundle, tol: float | None = None) -> CoactionCrossed:
    gens = [dual_coaction(f) @ np.kron(np.eye(_carrier(B)), multiplication(phi)) for phi, f in _spanning_family(B)]
    alg = star_algebra_closure(gens, tol)
    return CoactionCrossed(B, alg, _carrier(B))


def _carrier(B: FellBundle) -> int:
    return B.carrier_dim if uses_induced_carrier(B) else B.G.order * B.carrier_dim


def k_phi_f(phi: np.ndarray, f: Section) -> Kernel:
    """k(r, s) = phi(s) f(r s^-1)."""
    B = f.bundle
    G = B.G
    return Kernel(B, {(r, s): phi[s] * B.coords(G.mul(r, G.inv(s)), f(G.mul(r, G.inv(s))))
                      for r, s in product(G, G)})


@dataclass(eq=False)
class TakaiIso:
    kernels: KernelAlgebra
    crossed: CoactionCrossed
    matrix: np.ndarray          # kernel coordinates -> vec of the coaction side
    report: Report

    def apply(self, k: Kernel) -> np.ndarray:
        n = self.crossed.algebra.n
        return (self.matrix @ k.coords()).reshape(n, n)

    @property
    def sigma_defect(self) -> float:
        return max((c.residual or 0.0) for c in self.report.checks
                   if c.name in ("multiplicative", "star preserving", "well defined on random pairs"))

    @property
    def equivariance_defect(self) -> float:
        return max((c.residual or 0.0) for c in self.report.checks if c.name.startswith("equivariant"))


def takai_iso(B: FellBundle, rng: np.random.Generator | None = None) -> TakaiIso:
    rng = rng or np.random.default_rng(41)
    G = B.G
    ka = kernel_algebra(B)
    cc = coaction_crossed(B)
    n = _carrier(B)
    one = lambda m: np.kron(np.eye(n), m)  # noqa: E731
    fam = list(_spanning_family(B))
    xs = [k_phi_f(phi, f).coords() for phi, f in fam]
    ys = [dual_coaction(f) @ one(multiplication(phi)) for phi, f in fam]
    rep = Report()
    rk = rank(np.array(xs)) if xs else 0
    rep.add("spanning family spans k(B)", rk == ka.dim, detail={"rank": rk, "dim k": ka.dim})
    if xs:
        S, ok = linear_map_from_pairs([x.reshape(-1, 1) for x in xs], ys)
    else:
        S, ok = np.zeros((cc.algebra.n ** 2, 0)), True
    rep.add("kernel ranks match", ok)
    iso = TakaiIso(ka, cc, S, rep)
    rep.add("dim coaction crossed = dim k(B)", cc.dim == ka.dim, detail={"coaction": cc.dim, "k": ka.dim})
    img = rank(S) if S.size else 0
    rep.add("sigma bijective", img == ka.dim == cc.dim)
    wd = mul = st = eq_rho = eq_phi = 0.0
    for _ in range(3):
        phi = rng.standard_normal(G.order) + 1j * rng.standard_normal(G.order)
        f = random_section(B, rng)
        wd = max(wd, float(np.abs(iso.apply(k_phi_f(phi, f)) - dual_coaction(f) @ one(multiplication(phi))).max()))
        k1, k2 = random_kernel(B, rng), random_kernel(B, rng)
        mul = max(mul, float(np.abs(iso.apply(k_mul(k1, k2)) - iso.apply(k1) @ iso.apply(k2)).max()))
        st = max(st, float(np.abs(iso.apply(k_star(k1)) - adjoint(iso.apply(k1))).max()))
        for t in G:
            # dual action as conjugation by 1 (x) rho_t
            eq_rho = max(eq_rho, float(np.abs(iso.apply(natural_action(t, k1)) - cc.dual_action(t, iso.apply(k1))).max()))
            # dual action through phi_t on the spanning family
            lhs = iso.apply(natural_action(t, k_phi_f(phi, f)))
            rhs = dual_coaction(f) @ one(multiplication(translate(G, phi, t)))
            eq_phi = max(eq_phi, float(np.abs(lhs - rhs).max()))
    rep.add("well defined on random pairs", wd <= 1e-8, residual=wd)
    rep.add("multiplicative", mul <= 1e-8, residual=mul)
    rep.add("star preserving", st <= 1e-8, residual=st)
    rep.add("equivariant (conjugation form)", eq_rho <= 1e-8, residual=eq_rho)
    rep.add("equivariant (translation form)", eq_phi <= 1e-8, residual=eq_phi)
    if uses_induced_carrier(B):
        flip = _flip(G.order, B.carrier_dim)
        fl = 0.0
        for _ in range(2):
            k = random_kernel(B, rng)
            fl = max(fl, float(np.abs(iso.apply(k) - flip @ pi_c(k) @ adjoint(flip)).max()))
        rep.add("sigma = pi_c up to the tensor flip", fl <= 1e-8, residual=fl)
    return iso


def _flip(g: int, n: int) -> np.ndarray:
    """Unitary l2(G) (x) C^n -> C^n (x) l2(G)."""
    F = np.zeros((g * n, g * n))
    for a in range(g):
        for i in range(n):
            F[i * g + a, a * n + i] = 1
    return F
