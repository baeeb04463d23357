"""Partial actions of finite groups on finite-dimensional C*-algebras.

Two representations are used. ``PartialActionAlg`` is the exact block form
(ideals are block subsets, maps are block bijections with unitaries).
``LinearPartialAction`` is a concrete form over a *-subalgebra of M_n with
domains as subspaces and maps as linear operators on vec(M_n); derived
actions of trings come out in this form and are converted back to block form
through matrix units.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import permutations, product
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .core import (
    FdModel, FiniteGroup, MatrixStarAlgebra, Report, Subspace, adjoint, default_tol, fd_model, rank,
    regular_reps, star_algebra_closure,
)
from .fdalg import FdCStar, Ideal, PartialIsoAlg, action_defect, compose_partial_iso, extends, identity_iso
from .finspace import FinTop, PartialActionTop, enveloping_space, graph_closed, is_hausdorff


@dataclass(frozen=True, eq=False)
class PartialActionAlg:
    G: FiniteGroup
    A: FdCStar
    domains: tuple[frozenset[str], ...]     # support of D_t
    maps: tuple[PartialIsoAlg, ...]         # alpha_t : D_{t^-1} -> D_t

    def D(self, t: int) -> Ideal:
        return Ideal(self.A, frozenset(self.domains[t]))

    def alpha(self, t: int, a: np.ndarray) -> np.ndarray:
        return self.maps[t].apply(a)

    def is_global(self) -> bool:
        return all(set(d) == set(self.A.labels) for d in self.domains)

    def is_commutative(self) -> bool:
        return self.A.is_commutative()

    def to_json(self) -> dict:
        lab = self.G.label
        return {
            "kind": "alg",
            "group": self.G.to_json(),
            "algebra": self.A.to_json(),
            "D": {lab(t): sorted(self.domains[t]) for t in self.G},
            "alpha": {lab(t): self.maps[t].to_json() for t in self.G},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "PartialActionAlg":
        G = FiniteGroup.from_json(data["group"])
        A = FdCStar.from_json(data["algebra"])
        dom = tuple(A.check_labels(data["D"][G.label(t)]) for t in G)
        maps = []
        for t in G:
            raw = data["alpha"].get(G.label(t))
            if raw is None and t == G.e:
                maps.append(identity_iso(A))
            else:
                maps.append(PartialIsoAlg.from_json(A, raw))
        return cls(G, A, dom, tuple(maps))


def make_global(G: FiniteGroup, A: FdCStar, maps: Sequence[PartialIsoAlg]) -> PartialActionAlg:
    whole = frozenset(A.labels)
    return PartialActionAlg(G, A, tuple(whole for _ in G), tuple(maps))


def trivial_action(G: FiniteGroup, A: FdCStar) -> PartialActionAlg:
    return make_global(G, A, [identity_iso(A) for _ in G])


def validate_alg(alpha: PartialActionAlg, tol: float | None = None) -> Report:
    tol = default_tol() if tol is None else tol
    G, A = alpha.G, alpha.A
    rep = Report()
    whole = frozenset(A.labels)
    rep.add("D_e = A", alpha.domains[G.e] == whole)
    rep.add("alpha_e = id", extends(alpha.maps[G.e], identity_iso(A), tol) and set(alpha.maps[G.e].sigma) == whole)
    for t in G:
        name, ti = G.label(t), G.inv(t)
        m = alpha.maps[t]
        ok = set(m.sigma) == set(alpha.domains[ti]) and set(m.sigma.values()) == set(alpha.domains[t])
        rep.add(f"alpha_{name}: D_t^-1 -> D_t", ok)
        if not ok:
            continue
        rep.add(f"alpha_{name} unitaries", m.unitary_defect() <= 1e3 * tol, residual=m.unitary_defect())
        back = compose_partial_iso(alpha.maps[ti], m)
        rep.add(f"alpha_{{{name}^-1}} alpha_{name} = id", extends(identity_iso(A), back, tol)
                and set(back.sigma) == set(m.sigma))
        for s in G:
            img = {m.sigma[b] for b in alpha.domains[ti] & alpha.domains[s]}
            rhs = set(alpha.domains[t] & alpha.domains[G.mul(t, s)])
            if img != rhs:
                rep.add(f"alpha_{name}(D_t^-1 & D_{G.label(s)}) = D_t & D_ts", False,
                        detail={"lhs": sorted(img), "rhs": sorted(rhs)})
    if rep.ok:
        for s, t in product(G, G):
            st = G.mul(s, t)
            comp = compose_partial_iso(alpha.maps[s], alpha.maps[t])
            if not extends(alpha.maps[st], comp, tol):
                rep.add(f"alpha_{G.label(st)} extends alpha_{G.label(s)} alpha_{G.label(t)}", False)
        rep.add("partial action axioms", rep.ok)
    return rep


def restrict(beta: PartialActionAlg, labels) -> PartialActionAlg:
    """Restriction of a global action to the ideal on ``labels``."""
    if not beta.is_global() or not validate_alg(beta):
        raise ValueError("restrict needs a valid global action")
    B = beta.A
    I = B.check_labels(labels)
    A = FdCStar(tuple(b for b in B.labels if b in I), tuple(B.size(b) for b in B.labels if b in I))
    doms, maps = [], []
    for t in beta.G:
        image = {beta.maps[t].sigma[b] for b in I}
        doms.append(frozenset(I & image))
    for t in beta.G:
        src = doms[beta.G.inv(t)]
        m = beta.maps[t]
        maps.append(PartialIsoAlg(A, A, {b: m.sigma[b] for b in src}, {b: m.unitaries[b] for b in src}))
    return PartialActionAlg(beta.G, A, tuple(doms), tuple(maps))


def global_part(alpha: PartialActionAlg) -> frozenset[int]:
    """Largest subgroup on which alpha is global."""
    whole = frozenset(alpha.A.labels)
    G = alpha.G
    H = frozenset(t for t in G if alpha.domains[t] == whole and alpha.domains[G.inv(t)] == whole)
    assert all(G.mul(a, b) in H for a in H for b in H), "global part is not closed"
    return H


# ---------------------------------------------------------------- envelopes


@dataclass(frozen=True, eq=False)
class EnvelopeWitness:
    B: FdCStar
    beta: PartialActionAlg
    embed: PartialIsoAlg      # A -> B, full domain, onto an ideal of B


def check_enveloping(alpha: PartialActionAlg, w: EnvelopeWitness, tol: float | None = None) -> Report:
    tol = default_tol() if tol is None else tol
    G = alpha.G
    rep = Report()
    rep.add("beta global and valid", w.beta.is_global() and bool(validate_alg(w.beta, tol)))
    rep.add("embedding defined on all of A", set(w.embed.sigma) == set(alpha.A.labels))
    if not rep.ok:
        return rep
    J = frozenset(w.embed.sigma.values())
    # (1) the image is an ideal: automatic for block maps, check injectivity
    rep.add("embed(A) is an ideal of B", len(J) == len(alpha.A.labels))
    # (2) D_t = A & beta_t(A) and alpha_t = beta_t there
    for t in G:
        bt = w.beta.maps[t]
        expected = J & {bt.sigma[c] for c in J}
        got = {w.embed.sigma[b] for b in alpha.domains[t]}
        rep.add(f"D_{G.label(t)} = A & beta_t(A)", got == expected, detail=None if got == expected else
                {"embedded": sorted(got), "expected": sorted(expected)})
        lhs = compose_partial_iso(bt, w.embed).restrict(alpha.domains[G.inv(t)])
        rhs = compose_partial_iso(w.embed, alpha.maps[t])
        ok = set(lhs.sigma) == set(rhs.sigma) and all(lhs.sigma[b] == rhs.sigma[b] for b in lhs.sigma)
        d = action_defect(lhs, rhs, lhs.sigma) if ok else float("inf")
        rep.add(f"alpha_{G.label(t)} = beta_t on A", ok and d <= 1e3 * tol, residual=d)
    # (3) the beta-orbit of A spans B
    vecs = [w.B.coords(w.beta.alpha(t, w.embed.apply(a))) for t in G for a in alpha.A.basis()]
    r = rank(np.array(vecs), tol) if vecs else 0
    rep.add("span beta-orbit of A = B", r == w.B.dim, detail={"rank": r, "dim": w.B.dim})
    return rep


def envelope_by_orbit(beta: PartialActionAlg, labels) -> tuple[PartialActionAlg, EnvelopeWitness]:
    """Restrict a global action to an ideal and return the restricted system
    with the envelope cut down to the orbit of the ideal."""
    alpha = restrict(beta, labels)
    G, B = beta.G, beta.A
    orbit = {beta.maps[t].sigma[b] for t in G for b in alpha.A.labels}
    Bo = FdCStar(tuple(b for b in B.labels if b in orbit), tuple(B.size(b) for b in B.labels if b in orbit))
    maps = [PartialIsoAlg(Bo, Bo, {b: beta.maps[t].sigma[b] for b in Bo.labels},
                          {b: beta.maps[t].unitaries[b] for b in Bo.labels}) for t in G]
    w = EnvelopeWitness(Bo, make_global(G, Bo, maps), PartialIsoAlg(alpha.A, Bo, {b: b for b in alpha.A.labels}))
    return alpha, w


def commutative_enveloping(alpha: PartialActionAlg) -> EnvelopeWitness:
    """Envelope of a commutative system through its (discrete) spectrum."""
    if not alpha.is_commutative():
        raise ValueError("commutative_enveloping needs 1-dimensional blocks")
    top = induced_block_action(alpha)
    env = enveloping_space(top)
    # discrete spectra always have closed graphs, so the quotient is Hausdorff
    assert graph_closed(top) and is_hausdorff(env.space)
    G = alpha.G
    B = FdCStar(env.space.points, tuple(1 for _ in env.space.points))
    maps = [PartialIsoAlg(B, B, dict(env.action.maps[t])) for t in G]
    beta = make_global(G, B, maps)
    return EnvelopeWitness(B, beta, PartialIsoAlg(alpha.A, B, dict(env.iota)))


def induced_block_action(alpha: PartialActionAlg) -> PartialActionTop:
    """The partial action on the (discrete) block set: X_t = supp D_t, maps sigma_t."""
    X = FinTop.discrete(alpha.A.labels)
    return PartialActionTop(alpha.G, X, tuple(frozenset(d) for d in alpha.domains),
                            tuple(dict(m.sigma) for m in alpha.maps))


@dataclass(eq=False)
class EnvelopeIso:
    """A *-isomorphism B1 -> B2 as a matrix on block coordinates."""

    B1: FdCStar
    B2: FdCStar
    matrix: np.ndarray
    report: Report

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.B2.from_coords(self.matrix @ self.B1.coords(x))

    def block_permutation(self) -> dict[str, str]:
        out = {}
        for b in self.B1.labels:
            img = self.apply(self.B1.unit([b]))
            for c in self.B2.labels:
                if np.linalg.norm(img - self.B2.unit([c])) < 1e-6:
                    out[b] = c
        return out


def enveloping_iso(alpha: PartialActionAlg, w1: EnvelopeWitness, w2: EnvelopeWitness,
                   tol: float | None = None) -> EnvelopeIso:
    """The unique equivariant isomorphism fixing A, built on the spanning family
    sum beta_t(a_t) -> sum gamma_t(a_t)."""
    tol = default_tol() if tol is None else tol
    for w in (w1, w2):
        if not check_enveloping(alpha, w, tol):
            raise ValueError("witness fails the enveloping conditions")
    G = alpha.G
    basis = alpha.A.basis()
    M1 = np.array([w1.B.coords(w1.beta.alpha(t, w1.embed.apply(a))) for t in G for a in basis]).T
    M2 = np.array([w2.B.coords(w2.beta.alpha(t, w2.embed.apply(a))) for t in G for a in basis]).T
    r1, r2, r12 = rank(M1, tol), rank(M2, tol), rank(np.vstack([M1, M2]), tol)
    rep = Report()
    rep.add("spanning maps have equal kernels", r1 == r2 == r12, detail={"ranks": [r1, r2, r12]})
    if not rep.ok:
        raise ValueError(f"rank mismatch {r1}, {r2}, {r12}")
    Phi = M2 @ np.linalg.pinv(M1, rcond=1e-10)
    iso = EnvelopeIso(w1.B, w2.B, Phi, rep)
    rep.add("well defined on the spanning family", True, residual=float(np.abs(Phi @ M1 - M2).max()))
    units = w1.B.basis()
    mul = max(float(np.abs(iso.apply(x @ y) - iso.apply(x) @ iso.apply(y)).max()) for x in units for y in units)
    star = max(float(np.abs(iso.apply(adjoint(x)) - adjoint(iso.apply(x))).max()) for x in units)
    eqv = max(float(np.abs(iso.apply(w1.beta.alpha(t, x)) - w2.beta.alpha(t, iso.apply(x))).max())
              for t in G for x in units)
    fix = max(float(np.abs(iso.apply(w1.embed.apply(a)) - w2.embed.apply(a)).max()) for a in basis)
    rep.add("multiplicative", mul <= 1e-8, residual=mul)
    rep.add("star preserving", star <= 1e-8, residual=star)
    rep.add("equivariant", eqv <= 1e-8, residual=eqv)
    rep.add("identity on A", fix <= 1e-8, residual=fix)
    rep.add("bijective", w1.B.dim == w2.B.dim == rank(Phi, tol))
    return iso


def conjugate_witness(w: EnvelopeWitness, perm: Mapping[str, str], unitaries: Mapping[str, np.ndarray]) -> EnvelopeWitness:
    """Transport a witness along a block relabeling plus per-block unitaries."""
    B = w.B
    B2 = FdCStar(tuple(perm[b] for b in B.labels), B.sizes)
    Phi = PartialIsoAlg(B, B2, dict(perm), dict(unitaries))
    Pinv = Phi.inverse()
    maps = [compose_partial_iso(Phi, compose_partial_iso(m, Pinv)) for m in w.beta.maps]
    return EnvelopeWitness(B2, make_global(w.beta.G, B2, maps), compose_partial_iso(Phi, w.embed))


# ---------------------------------------------------------------- concrete form


@dataclass(frozen=True, eq=False)
class LinearPartialAction:
    G: FiniteGroup
    alg: MatrixStarAlgebra
    domains: tuple[Subspace, ...]     # subspaces of vec(M_n)
    maps: tuple["DomainMap", ...]    # alpha_t, known on D_t^-1

    def apply(self, t: int, x: np.ndarray) -> np.ndarray:
        n = self.alg.n
        return (self.maps[t] @ np.ravel(x)).reshape(n, n)

    def domain_basis(self, t: int) -> np.ndarray:
        return self.domains[t].basis.reshape(-1, self.alg.n, self.alg.n)


@dataclass(frozen=True, eq=False)
class DomainMap:
    """A linear map known on a subspace: row i of ``basis`` (orthonormal) goes
    to row i of ``images``. Vectors are projected onto the domain first."""

    basis: np.ndarray       # (k, N)
    images: np.ndarray      # (k, M)

    def __matmul__(self, v: np.ndarray) -> np.ndarray:
        return (np.conj(self.basis) @ np.ravel(v)) @ self.images

    def rows(self, X: np.ndarray) -> np.ndarray:
        """Apply to each row of X."""
        return (X @ np.conj(self.basis).T) @ self.images

    @classmethod
    def dense(cls, L: np.ndarray, domain: Subspace) -> "DomainMap":
        return cls(domain.basis, domain.basis @ L.T)

    @classmethod
    def conjugation(cls, R: np.ndarray, S: np.ndarray, domain: Subspace, shape: tuple[int, int]) -> "DomainMap":
        """x -> R x S* on a domain of (m x n) matrices."""
        X = domain.basis.reshape(-1, *shape)
        imgs = np.einsum("ij,ajk,lk->ail", R, X, np.conj(S), optimize=True)
        return cls(domain.basis, imgs.reshape(len(X), -1))


def domain_map_from_pairs(domain: Subspace, xs: Sequence[np.ndarray], ys: Sequence[np.ndarray],
                          tol: float | None = None) -> tuple[DomainMap, bool]:
    """The map x_i -> y_i on ``domain``; the flag says the x_i lie in and span the
    domain and the assignment is well defined."""
    tol = default_tol() if tol is None else tol
    X = np.array([np.ravel(x) for x in xs], dtype=complex).reshape(len(xs), domain.n)
    m = np.ravel(ys[0]).size if len(ys) else 0
    Y = np.array([np.ravel(y) for y in ys], dtype=complex).reshape(len(ys), m)
    if domain.dim == 0:
        return DomainMap(domain.basis, np.zeros((0, m), complex)), len(xs) == 0 or float(np.abs(X).max()) <= tol
    C = X @ np.conj(domain.basis).T
    inside = float(np.abs(X - C @ domain.basis).max()) <= 1e-7 * max(1.0, float(np.abs(X).max()))
    images = np.linalg.pinv(C, rcond=1e-10) @ Y
    # well defined iff the least-squares images reproduce every pair
    consistent = float(np.abs(C @ images - Y).max()) <= 1e-7 * max(1.0, float(np.abs(Y).max()))
    ok = inside and consistent and rank(C, tol) == domain.dim
    return DomainMap(domain.basis, images), ok


def linear_map_from_pairs(xs: Sequence[np.ndarray], ys: Sequence[np.ndarray], tol: float | None = None) -> tuple[np.ndarray, bool]:
    """Linear L with L x_i = y_i; the flag says whether that is well defined."""
    tol = default_tol() if tol is None else tol
    X = np.array([np.ravel(x) for x in xs]).T
    Y = np.array([np.ravel(y) for y in ys]).T
    if X.size == 0:
        n = np.ravel(xs[0]).size if len(xs) else 0
        return np.zeros((n, n), dtype=complex), True
    ok = rank(np.vstack([X, Y]), tol) == rank(X, tol)
    L = Y @ np.linalg.pinv(X, rcond=1e-10)
    return L, ok


def to_linear(alpha: PartialActionAlg) -> LinearPartialAction:
    A = alpha.A
    n = A.hdim
    doms = tuple(alpha.D(t).subspace() for t in alpha.G)
    maps = []
    for t in alpha.G:
        src = doms[alpha.G.inv(t)]
        imgs = np.array([alpha.alpha(t, e.reshape(n, n)).ravel() for e in src.basis]).reshape(src.dim, n * n)
        maps.append(DomainMap(src.basis, imgs))
    return LinearPartialAction(alpha.G, A.as_matrix_algebra(), doms, tuple(maps))


def validate_linear(lin: LinearPartialAction, tol: float = 1e-8) -> Report:
    """Numerical partial-action axioms for a concrete system."""
    G, alg = lin.G, lin.alg
    rep = Report()
    rep.add("D_e = A", lin.domains[G.e].equals(alg.space, 1e-7))
    worst = 0.0
    for x in alg.elements:
        worst = max(worst, float(np.abs(lin.apply(G.e, x) - x).max()))
    rep.add("alpha_e = id", worst <= tol, residual=worst)
    hom = inv = img = ext = 0.0
    n = alg.n
    rng = np.random.default_rng(0)
    for t in G:
        ti = G.inv(t)
        Db = lin.domain_basis(ti)
        if lin.domains[t].dim != lin.domains[ti].dim:
            img = max(img, 1.0)
        if not len(Db):
            continue
        k = len(Db)
        imgs = lin.maps[t].rows(Db.reshape(k, -1)).reshape(k, n, n)
        off = imgs.reshape(k, -1) - (imgs.reshape(k, -1) @ np.conj(lin.domains[t].basis).T) @ lin.domains[t].basis
        img = max(img, float(np.abs(off).max()))
        back = lin.maps[ti].rows(imgs.reshape(k, -1)).reshape(k, n, n)
        inv = max(inv, float(np.abs(back - Db).max()))
        # bilinear, so basis times random domain elements on both sides is enough
        for _ in range(2):
            c = rng.standard_normal(k) + 1j * rng.standard_normal(k)
            r, r_img = np.tensordot(c, Db, axes=1), np.tensordot(c, imgs, axes=1)
            got_r = lin.maps[t].rows(np.einsum("aij,jk->aik", Db, r).reshape(k, -1)).reshape(k, n, n)
            got_l = lin.maps[t].rows(np.einsum("ij,ajk->aik", r, Db).reshape(k, -1)).reshape(k, n, n)
            hom = max(hom, float(np.abs(got_r - imgs @ r_img).max()), float(np.abs(got_l - r_img @ imgs).max()))
        stars = lin.maps[t].rows(np.conj(np.transpose(Db, (0, 2, 1))).reshape(k, -1)).reshape(k, n, n)
        hom = max(hom, float(np.abs(stars - np.conj(np.transpose(imgs, (0, 2, 1)))).max()))
        for s in G:
            # alpha_st extends alpha_s alpha_t on D_{t^-1} & alpha_t^{-1}(D_{s^-1})
            common = lin.domains[t].meet(lin.domains[G.inv(s)], 1e-7)
            if not common.dim:
                continue
            Y = common.basis
            X = lin.maps[ti].rows(Y)
            ext = max(ext, float(np.abs(lin.maps[G.mul(s, t)].rows(X) - lin.maps[s].rows(Y)).max()))
    rep.add("alpha_t maps D_t^-1 into D_t", img <= tol, residual=img)
    rep.add("alpha_t^-1 = alpha_t^{-1}", inv <= tol, residual=inv)
    rep.add("alpha_t *-homomorphism", hom <= tol, residual=hom)
    rep.add("alpha_st extends alpha_s alpha_t", ext <= tol, residual=ext)
    return rep


def to_block_form(lin: LinearPartialAction, prefix: str = "c",
                  model: FdModel | None = None) -> tuple[PartialActionAlg, FdModel]:
    """Block form of a concrete system, through matrix units of its algebra."""
    model = model or fd_model(lin.alg)
    k = len(model.sizes)
    labels = tuple(f"{prefix}{i + 1}" for i in range(k))
    A = FdCStar(labels, tuple(model.sizes))
    units = {labels[i]: model.units[i] for i in range(k)}
    doms = []
    for t in lin.G:
        sup = frozenset(b for b in labels if lin.domains[t].contains(units[b][0, 0].ravel(), 1e-7))
        if sum(A.size(b) ** 2 for b in sup) != lin.domains[t].dim:
            raise ValueError("domain is not a sum of blocks")
        doms.append(sup)
    maps = []
    for t in lin.G:
        sigma, us = {}, {}
        for b in doms[lin.G.inv(t)]:
            U = units[b]
            img = lin.apply(t, sum(U[i, i] for i in range(U.shape[0])))
            c = _locate_block(model, labels, img)
            sigma[b] = c
            n = A.size(b)
            ci = labels.index(c)
            phi = [[model.to_blocks(lin.apply(t, U[i, j]))[ci] for j in range(n)] for i in range(n)]
            us[b] = _unitary_from_unit_images(phi)
        maps.append(PartialIsoAlg(A, A, sigma, us))
    return PartialActionAlg(lin.G, A, tuple(doms), tuple(maps)), model


def _unitary_from_unit_images(phi) -> np.ndarray:
    """U with U E_ij U* = phi[i][j] for images of matrix units in a full block."""
    n = len(phi)
    _, V = np.linalg.eigh((phi[0][0] + adjoint(phi[0][0])) / 2)
    u1 = V[:, -1]
    return np.array([phi[i][0] @ u1 for i in range(n)]).T


def _locate_block(model: FdModel, labels, central: np.ndarray) -> str:
    blocks = model.to_blocks(central)
    for i, blk in enumerate(blocks):
        if np.linalg.norm(blk - np.eye(len(blk))) < 1e-6:
            return labels[i]
    raise ValueError("image of a central projection is not a minimal central projection")


# ---------------------------------------------------------------- isomorphism search


def find_isomorphism(a1: PartialActionAlg, a2: PartialActionAlg, tol: float = 1e-8,
                     max_phase_choices: int = 4096) -> PartialIsoAlg | None:
    """An equivariant *-isomorphism A1 -> A2 carrying D1_t onto D2_t, or None.

    Block bijections are searched exhaustively; for each candidate the
    unitaries are solved on a spanning tree of the block graph, after fixing
    the root unitary from the stabiliser constraint.
    """
    G = a1.G
    if G.order != a2.G.order or sorted(a1.A.sizes) != sorted(a2.A.sizes):
        return None
    L1, L2 = a1.A.labels, a2.A.labels
    for perm in permutations(L2):
        tau = dict(zip(L1, perm))
        if any(a1.A.size(b) != a2.A.size(tau[b]) for b in L1):
            continue
        if any({tau[b] for b in a1.domains[t]} != set(a2.domains[t]) for t in G):
            continue
        if any(tau[a1.maps[t].sigma[b]] != a2.maps[t].sigma[tau[b]] for t in G for b in a1.maps[t].sigma):
            continue
        W = _solve_unitaries(a1, a2, tau, max_phase_choices)
        if W is None:
            continue
        Phi = PartialIsoAlg(a1.A, a2.A, tau, W)
        worst = 0.0
        for t in G:
            lhs = compose_partial_iso(Phi, a1.maps[t])
            rhs = compose_partial_iso(a2.maps[t], Phi).restrict(a1.maps[t].sigma)
            worst = max(worst, action_defect(lhs, rhs, a1.maps[t].sigma))
        if worst <= tol:
            return Phi
    return None


def _solve_unitaries(a1, a2, tau, max_choices) -> dict | None:
    G = a1.G
    W: dict[str, np.ndarray] = {}
    for root in a1.A.labels:
        if root in W:
            continue
        n = a1.A.size(root)
        stab = [t for t in G if root in a1.maps[t].sigma and a1.maps[t].sigma[root] == root]
        U1 = [_det_one(a1.maps[t].unitaries[root]) for t in stab]
        U2 = [_det_one(a2.maps[t].unitaries[tau[root]]) for t in stab]
        if n ** len(stab) > max_choices:
            raise NotImplementedError("stabiliser phase search too large")
        roots = [np.exp(2j * np.pi * k / n) for k in range(n)]
        w0 = None
        rng = np.random.default_rng(5)
        for phases in product(roots, repeat=len(stab)):
            # U2_t X - c_t X U1_t = 0 for all t in the stabiliser
            eqs = [np.kron(u2, np.eye(n)) - c * np.kron(np.eye(n), u1.T) for u1, u2, c in zip(U1, U2, phases)]
            M = np.vstack(eqs) if eqs else np.zeros((0, n * n))
            null = _null_space(M, 1e-9) if M.size else np.eye(n * n)
            if null.shape[1] == 0:
                continue
            X = (null @ (rng.standard_normal(null.shape[1]) + 1j * rng.standard_normal(null.shape[1]))).reshape(n, n)
            if np.linalg.matrix_rank(X, tol=1e-8 * max(1.0, np.abs(X).max())) < n:
                continue
            w0, _ = scipy.linalg.polar(X)
            break
        if w0 is None:
            return None
        W[root] = w0
        queue = deque([root])
        while queue:
            b = queue.popleft()
            for t in G:
                m1 = a1.maps[t]
                if b not in m1.sigma:
                    continue
                c = m1.sigma[b]
                if c in W:
                    continue
                W[c] = a2.maps[t].unitaries[tau[b]] @ W[b] @ adjoint(m1.unitaries[b])
                queue.append(c)
    return W


def _null_space(M: np.ndarray, atol: float) -> np.ndarray:
    # absolute cutoff: the stacked equations are O(1) and may vanish exactly
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    big = np.zeros(vh.shape[0], dtype=bool)
    big[: len(s)] = s > atol
    return np.conj(vh[~big]).T


def _det_one(u: np.ndarray) -> np.ndarray:
    d = np.linalg.det(u)
    return u / d ** (1.0 / len(u))


# ---------------------------------------------------------------- envelope inside functions G -> A


@dataclass(eq=False)
class FunctionEnvelope:
    """B = span{beta_t(phi(A))} inside functions G -> A, on l2(G) (x) C^n.

    phi(a)(r) = alpha_{r^-1}(a 1_r) and beta_t(f)(r) = f(t^-1 r), implemented
    by conjugation with lambda_t (x) 1.
    """

    alpha: LinearPartialAction
    beta: LinearPartialAction
    embed: np.ndarray               # vec(a) -> vec(phi(a))
    implementers: list[np.ndarray]  # lambda_t (x) 1
    report: Report

    def phi(self, a: np.ndarray) -> np.ndarray:
        N = self.beta.alg.n
        return (self.embed @ np.ravel(a)).reshape(N, N)


def function_envelope_linear(lin: LinearPartialAction, tol: float | None = None) -> FunctionEnvelope:
    tol = default_tol() if tol is None else tol
    G, n = lin.G, lin.alg.n
    N = G.order * n
    lam, _ = regular_reps(G)
    R = [np.kron(l, np.eye(n)) for l in lam]

    def phi(a):
        out = np.zeros((N, N), dtype=complex)
        for r in G:
            piece = lin.domains[r].project(np.ravel(a)).reshape(n, n)
            out[r * n:(r + 1) * n, r * n:(r + 1) * n] = lin.apply(G.inv(r), piece)
        return out

    eye = np.eye(n * n, dtype=complex)
    embed = np.array([phi(eye[k].reshape(n, n)).ravel() for k in range(n * n)]).T
    basis = lin.alg.elements
    images = [phi(a) for a in basis]
    orbit = [R[t] @ y @ adjoint(R[t]) for t in G for y in images]
    B = star_algebra_closure(orbit, tol) if orbit else MatrixStarAlgebra(N, Subspace.zero(N * N), tol)
    span = Subspace.span([m.ravel() for m in orbit], N * N, tol)
    supers = tuple(DomainMap.conjugation(R[t], R[t], B.space, (N, N)) for t in G)
    beta = LinearPartialAction(G, B, tuple(B.space for _ in G), supers)
    rep = Report()
    rep.add("orbit span is a *-algebra", span.dim == B.dim, detail={"span": span.dim, "closure": B.dim})
    PhiA = Subspace.span([m.ravel() for m in images], N * N, tol)
    rep.add("phi injective", PhiA.dim == lin.alg.dim)
    hom = max((float(np.abs(phi(x @ y) - phi(x) @ phi(y)).max()) for x in basis for y in basis), default=0.0)
    hom = max([hom] + [float(np.abs(phi(adjoint(x)) - adjoint(phi(x))).max()) for x in basis])
    rep.add("phi *-homomorphism", hom <= 1e-8, residual=hom)
    rep.add("phi(A) ideal of B", PhiA.contains_all([(b @ y).ravel() for b in B.elements for y in images], 1e-8)
            and PhiA.contains_all([(y @ b).ravel() for b in B.elements for y in images], 1e-8))
    eqv = 0.0
    for t in G:
        moved = Subspace.span([(R[t] @ y @ adjoint(R[t])).ravel() for y in images], N * N, tol)
        Dt = Subspace.span([phi(x).ravel() for x in lin.domain_basis(t)], N * N, tol)
        rep.add(f"phi(D_{G.label(t)}) = phi(A) & beta_t(phi(A))", PhiA.meet(moved).equals(Dt, 1e-7))
        for x in lin.domain_basis(G.inv(t)):
            eqv = max(eqv, float(np.abs(R[t] @ phi(x) @ adjoint(R[t]) - phi(lin.apply(t, x))).max()))
    rep.add("beta_t phi = phi alpha_t", eqv <= 1e-8, residual=eqv)
    return FunctionEnvelope(lin, beta, embed, R, rep)


def function_envelope(alpha: PartialActionAlg, prefix: str = "f") -> tuple[EnvelopeWitness, FunctionEnvelope]:
    """Block-form envelope witness built from functions G -> A."""
    fe = function_envelope_linear(to_linear(alpha))
    if not fe.report.ok:
        raise AssertionError(f"function envelope fails: {[c.name for c in fe.report.failures]}")
    beta, model = to_block_form(fe.beta, prefix)
    labels = beta.A.labels
    A = alpha.A
    sigma, us = {}, {}
    for b in A.labels:
        c = _locate_block(model, labels, fe.phi(A.unit([b])))
        ci = labels.index(c)
        n = A.size(b)
        units = {(i, j): m for bb, i, j, m in A.matrix_units([b])}
        phi = [[model.to_blocks(fe.phi(units[(i, j)]))[ci] for j in range(n)] for i in range(n)]
        sigma[b] = c
        us[b] = _unitary_from_unit_images(phi)
    return EnvelopeWitness(beta.A, beta, PartialIsoAlg(A, beta.A, sigma, us)), fe
