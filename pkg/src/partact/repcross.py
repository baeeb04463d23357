"""Sections, the regular representation and reduced cross-sectional algebras.

For a semidirect bundle the regular representation is realised on the carrier
K of ``represent()``, which is L2(B) tensored over A with H_A; there
Lambda(f) = sum_t pi(f(t)). For any other bundle with a faithful
representation pi the induced form pi_lambda(f) = sum_t lambda_t (x) pi(f(t))
is used. Both are available and are compared in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    MatrixStarAlgebra, Report, Subspace, adjoint, default_tol, rank, regular_reps, spectral_norm,
    star_algebra_closure, wedderburn,
)
from .fellbundle import FellBundle, SemidirectBundle, SubBundle, Triple, semidirect_bundle
from .paction import PartialActionAlg


@dataclass(frozen=True, eq=False)
class Section:
    bundle: FellBundle
    values: tuple

    def __call__(self, t: int):
        return self.values[t]

    def __add__(self, other: "Section") -> "Section":
        B = self.bundle
        return Section(B, tuple(B.add(t, self.values[t], other.values[t]) for t in B.G))

    def scale(self, c: complex) -> "Section":
        B = self.bundle
        return Section(B, tuple(B.scale(t, c, self.values[t]) for t in B.G))

    def coords(self) -> np.ndarray:
        B = self.bundle
        parts = [B.coords(t, self.values[t]) for t in B.G]
        return np.concatenate(parts) if parts else np.zeros(0)


def zero_section(B: FellBundle) -> Section:
    return Section(B, tuple(B.zero(t) for t in B.G))


def point_section(B: FellBundle, t: int, x) -> Section:
    vals = [B.zero(s) for s in B.G]
    vals[t] = x
    return Section(B, tuple(vals))


def section_basis(B: FellBundle) -> list[Section]:
    return [point_section(B, t, x) for t in B.G for x in B.basis(t)]


def random_section(B: FellBundle, rng: np.random.Generator) -> Section:
    return Section(B, tuple(B.random(t, rng) for t in B.G))


def unit_section(B: FellBundle) -> Section:
    """The unit of B_e placed at e (B_e is unital in finite dimension)."""
    G = B.G
    basis = B.basis(G.e)
    # solve for the unit: the element u with u x = x for all basis x
    d = len(basis)
    rows, rhs = [], []
    for x in basis:
        prods = np.array([B.coords(G.e, B.mul(G.e, b, G.e, x)) for b in basis]).T
        rows.append(prods)
        rhs.append(B.coords(G.e, x))
    c, *_ = np.linalg.lstsq(np.vstack(rows), np.concatenate(rhs), rcond=None)
    return point_section(B, G.e, B.from_coords(G.e, c) if d else B.zero(G.e))


def convolve(f: Section, g: Section) -> Section:
    """(f * g)(t) = sum_s f(s) g(s^-1 t)."""
    if f.bundle is not g.bundle:
        raise ValueError("sections of different bundles")
    B = f.bundle
    G = B.G
    out = []
    for t in G:
        acc = np.zeros(B.fiber_dim(t), dtype=complex)
        for s in G:
            u = G.mul(G.inv(s), t)
            acc = acc + B.coords(t, B.mul(s, f.values[s], u, g.values[u]))
        out.append(B.from_coords(t, acc))
    return Section(B, tuple(out))


def star(f: Section) -> Section:
    """f*(t) = f(t^-1)^*."""
    B = f.bundle
    G = B.G
    return Section(B, tuple(B.star(G.inv(t), f.values[G.inv(t)]) for t in G))


def _root(B: FellBundle) -> FellBundle:
    while isinstance(B, SubBundle):
        B = B.parent
    return B


def uses_induced_carrier(B: FellBundle) -> bool:
    return isinstance(_root(B), SemidirectBundle)


def pi_lambda(f: Section) -> np.ndarray:
    """sum_t lambda_t (x) pi(f(t)) on l2(G) (x) H."""
    B = f.bundle
    lam, _ = regular_reps(B.G)
    return sum(np.kron(lam[t], B.pi(t, f.values[t])) for t in B.G)


def regular_rep(f: Section) -> np.ndarray:
    B = f.bundle
    if uses_induced_carrier(B):
        return sum(B.pi(t, f.values[t]) for t in B.G)
    return pi_lambda(f)


@dataclass(eq=False)
class ReducedAlgebra:
    bundle: FellBundle
    algebra: MatrixStarAlgebra
    generators: list[np.ndarray]        # images of the basis sections
    report: Report

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def blocks(self) -> list[int]:
        return wedderburn(self.algebra).sorted_blocks

    def lam(self, f: Section) -> np.ndarray:
        return regular_rep(f)


def reduced_algebra(B: FellBundle, tol: float | None = None) -> ReducedAlgebra:
    tol = default_tol() if tol is None else tol
    gens = [regular_rep(f) for f in section_basis(B)]
    rep = Report()
    if not gens:
        n = B.carrier_dim if uses_induced_carrier(B) else B.G.order * B.carrier_dim
        return ReducedAlgebra(B, MatrixStarAlgebra(n, Subspace.zero(n * n), tol), [], rep)
    alg = star_algebra_closure(gens, tol)
    r = rank(np.array([g.ravel() for g in gens]), tol)
    expected = B.total_dim()
    rep.add("Lambda injective on sections", r == expected, detail={"rank": r, "sum of fiber dims": expected})
    rep.add("span of Lambda(sections) is closed", alg.dim == r, detail={"closure": alg.dim})
    return ReducedAlgebra(B, alg, gens, rep)


def crossed_product(alpha: PartialActionAlg) -> ReducedAlgebra:
    return reduced_algebra(semidirect_bundle(alpha))


def homomorphism_defect(B: FellBundle, rng: np.random.Generator, samples: int = 4) -> float:
    """max ||Lambda(f*g) - Lambda(f)Lambda(g)|| and ||Lambda(f*) - Lambda(f)*|| on random sections."""
    worst = 0.0
    for _ in range(samples):
        f, g = random_section(B, rng), random_section(B, rng)
        worst = max(worst, float(np.abs(regular_rep(convolve(f, g)) - regular_rep(f) @ regular_rep(g)).max()))
        worst = max(worst, float(np.abs(regular_rep(star(f)) - adjoint(regular_rep(f))).max()))
    return worst


@dataclass(eq=False)
class Inclusion:
    sub: ReducedAlgebra          # C*_r(A), computed on its own induced carrier
    image: MatrixStarAlgebra     # Lambda_B(C_c(A)) inside C*_r(B)
    parent: ReducedAlgebra
    report: Report


def inclusion_reduced(A: SubBundle, tol: float | None = None, rng: np.random.Generator | None = None) -> Inclusion:
    """C*_r(A) inside C*_r(B): Lambda_B restricted to sections of A.

    The norm of each sampled section is computed twice: in C*_r(B) and through
    pi_lambda of A with the restricted (still faithful) representation.
    """
    tol = default_tol() if tol is None else tol
    rng = rng or np.random.default_rng(3)
    B = A.parent
    parent = reduced_algebra(B, tol)
    sub = reduced_algebra(A, tol)
    rep = Report()
    n = parent.algebra.n
    image = MatrixStarAlgebra.from_span(sub.generators, n, tol) if sub.generators else \
        MatrixStarAlgebra(n, Subspace.zero(n * n), tol)
    rep.add("image inside C*_r(B)", all(parent.algebra.contains(g, 1e-8) for g in sub.generators))
    rep.add("image dim = sum of fiber dims of A", image.dim == A.total_dim(),
            detail={"image": image.dim, "expected": A.total_dim()})
    hom = homomorphism_defect(A, rng)
    rep.add("*-homomorphism", hom <= 1e-8, residual=hom)
    worst = 0.0
    for _ in range(4):
        f = random_section(A, rng)
        worst = max(worst, abs(spectral_norm(regular_rep(f)) - spectral_norm(pi_lambda(f))))
    rep.add("norm preserving", worst <= 1e-8, residual=worst)
    return Inclusion(sub, image, parent, rep)


@dataclass(eq=False)
class MoritaWitness:
    """C*_r(E) as an imprimitivity bimodule between C*_r(A) and C*_r(B)."""

    bimodule: list[np.ndarray]
    left: MatrixStarAlgebra
    right: MatrixStarAlgebra
    report: Report

    @property
    def dims(self) -> dict:
        return {"E": len(self.bimodule), "left": self.left.dim, "right": self.right.dim}


def _span(mats, n, tol) -> Subspace:
    return Subspace.span([m.ravel() for m in mats], n * n, tol)


def verify_hereditary_triple(tr: Triple, tol: float | None = None,
                             rng: np.random.Generator | None = None) -> MoritaWitness:
    """Span identities of the ideal triple inside C*_r(B), and the bimodule."""
    tol = default_tol() if tol is None else tol
    rng = rng or np.random.default_rng(11)
    if not tr.report.ok:
        raise ValueError("triple fails its containment checks")
    CA = [regular_rep(f) for f in section_basis(tr.A)]
    CE = [regular_rep(f) for f in section_basis(tr.E)]
    CB = [regular_rep(f) for f in section_basis(tr.B)]
    n = CB[0].shape[0]
    SA, SE, SB = _span(CA, n, tol), _span(CE, n, tol), _span(CB, n, tol)
    rep = Report()
    rep.add("C(A) C(E) <= C(E)", SE.contains_all([(a @ x).ravel() for a in CA for x in CE], 1e-8))
    rep.add("C(E) C(B) <= C(E)", SE.contains_all([(x @ b).ravel() for x in CE for b in CB], 1e-8))
    left = _span([x @ adjoint(y) for x in CE for y in CE], n, tol)
    rep.add("span C(E) C(E)* = C(A)", left.equals(SA, 1e-8), detail={"span": left.dim, "C(A)": SA.dim})
    hered = SA.contains_all([(a @ b @ c).ravel() for a in CA for b in CB for c in CA], 1e-8)
    rep.add("C(A) C(B) C(A) <= C(A)", hered)
    right = _span([adjoint(x) @ y for x in CE for y in CE], n, tol)
    full = right.equals(SB, 1e-8)
    rep.add("span C(E)* C(E) = C(B)", full, detail={"span": right.dim, "C(B)": SB.dim})
    if not rep.ok:
        raise ValueError(f"hereditary triple fails: {[c.name for c in rep.failures]}")
    # imprimitivity bimodule axioms on random elements of C*_r(E)
    Ebasis = SE.basis.reshape(-1, n, n)
    def rand_e():
        c = rng.standard_normal(len(Ebasis)) + 1j * rng.standard_normal(len(Ebasis))
        return np.tensordot(c, Ebasis, axes=1)
    assoc = inner = norms = pos = 0.0
    for _ in range(5):
        x, y, z = rand_e(), rand_e(), rand_e()
        assoc = max(assoc, float(np.abs((x @ adjoint(y)) @ z - x @ (adjoint(y) @ z)).max()))
        inner = max(inner, SA.residual((x @ adjoint(y)).ravel()), SB.residual((adjoint(x) @ y).ravel()))
        norms = max(norms, abs(spectral_norm(x @ adjoint(x)) - spectral_norm(adjoint(x) @ x)))
        w = np.linalg.eigvalsh(adjoint(x) @ x)
        pos = max(pos, float(max(0.0, -w.min())))
    rep.add("<x,y>_l z = x <y,z>_r", assoc <= 1e-8, residual=assoc)
    rep.add("inner products land in the corners", inner <= 1e-8, residual=inner)
    rep.add("||<x,x>_l|| = ||<x,x>_r||", norms <= 1e-8, residual=norms)
    rep.add("<x,x>_r >= 0", pos <= 1e-8, residual=pos)
    return MoritaWitness(
        list(Ebasis),
        MatrixStarAlgebra(n, SA, tol),
        MatrixStarAlgebra(n, SB, tol),
        rep,
    )


# ---------------------------------------------------------------- L2(B) as a right B_e-module


def l2_inner(xi: Section, eta: Section):
    """<xi, eta> = sum_s xi(s)* eta(s), an element of B_e."""
    B = xi.bundle
    G = B.G
    acc = np.zeros(B.fiber_dim(G.e), dtype=complex)
    for s in G:
        acc = acc + B.coords(G.e, B.mul(G.inv(s), B.star(s, xi(s)), s, eta(s)))
    return B.from_coords(G.e, acc)


def right_multiply(xi: Section, b) -> Section:
    """(xi b)(s) = xi(s) b for b in B_e."""
    B = xi.bundle
    return Section(B, tuple(B.mul(s, xi(s), B.G.e, b) for s in B.G))
