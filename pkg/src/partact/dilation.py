"""Partial representations, C*_p(G) and unitary dilation.

X is the set of subsets of G containing e, with the partial action
omega -> t omega defined on X_t^-1 = {omega : e, t^-1 in omega}; C*_p(G) is the
crossed product C(X) x G. Its envelope lives on the nonempty subsets, and a
partial representation u dilates through the balanced tensor product of
B~p with H over pB~p, where B~ = C(X~) x G and p = 1_X delta_e.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Mapping

import numpy as np

from .core import FiniteGroup, Report, Subspace, adjoint, rank, spectral_norm
from .fdalg import FdCStar, PartialIsoAlg, _matrix_from_json, _matrix_to_json
from .fellbundle import SemidirectBundle
from .finspace import FinTop, PartialActionTop, gelfand_bridge
from .paction import EnvelopeWitness, PartialActionAlg, check_enveloping, make_global
from .repcross import ReducedAlgebra, crossed_product, point_section, regular_rep

MAX_GROUP_ORDER = 5


def _guard(G: FiniteGroup):
    if G.order > MAX_GROUP_ORDER:
        raise ValueError(f"|G| = {G.order} exceeds the size guard {MAX_GROUP_ORDER}")


def subset_label(G: FiniteGroup, omega) -> str:
    return "{" + ",".join(G.label(t) for t in sorted(omega)) + "}"


def _subsets(G: FiniteGroup, containing_e: bool) -> list[frozenset]:
    out = []
    for k in range(1, G.order + 1):
        for S in combinations(range(G.order), k):
            if not containing_e or G.e in S:
                out.append(frozenset(S))
    return out


def _translate(G: FiniteGroup, t: int, omega) -> frozenset:
    return frozenset(G.mul(t, s) for s in omega)


# ---------------------------------------------------------------- partial representations


@dataclass(eq=False)
class PartialRep:
    G: FiniteGroup
    u: list[np.ndarray]

    @property
    def dim(self) -> int:
        return self.u[self.G.e].shape[0]

    def e(self, t: int) -> np.ndarray:
        return self.u[t] @ adjoint(self.u[t])

    def to_json(self) -> dict:
        return {"kind": "prep", "group": self.G.to_json(),
                "u": {self.G.label(t): _matrix_to_json(self.u[t]) for t in self.G}}

    @classmethod
    def from_json(cls, data: Mapping) -> "PartialRep":
        G = FiniteGroup.from_json(data["group"])
        u = [_matrix_from_json(data["u"][G.label(t)]) for t in G]
        shapes = {m.shape for m in u}
        if len(shapes) != 1 or any(a != b for a, b in shapes):
            raise ValueError("u_t must be square matrices of one size")
        return cls(G, u)


def validate_prep(rep_: PartialRep, tol: float = 1e-8) -> Report:
    G, u = rep_.G, rep_.u
    n = rep_.dim
    rep = Report()
    d = float(np.abs(u[G.e] - np.eye(n)).max())
    rep.add("u_e = 1", d <= tol, residual=d)
    d = max(float(np.abs(u[G.inv(t)] - adjoint(u[t])).max()) for t in G)
    rep.add("u_t^-1 = u_t*", d <= tol, residual=d)
    d = max(float(np.abs(u[s] @ u[t] @ u[G.inv(t)] - u[G.mul(s, t)] @ u[G.inv(t)]).max()) for s in G for t in G)
    rep.add("u_s u_t u_t^-1 = u_st u_t^-1", d <= tol, residual=d)
    d = max(float(np.abs(u[t] @ adjoint(u[t]) @ u[t] - u[t]).max()) for t in G)
    rep.add("u_t partial isometries", d <= tol, residual=d)
    d = max(float(np.abs(rep_.e(s) @ rep_.e(t) - rep_.e(t) @ rep_.e(s)).max()) for s in G for t in G)
    rep.add("e_t commute", d <= tol, residual=d)
    return rep


def unitary_prep(G: FiniteGroup, mats) -> PartialRep:
    return PartialRep(G, [np.asarray(m, dtype=complex) for m in mats])


# ---------------------------------------------------------------- C*_p(G) and its envelope


@dataclass(eq=False)
class CStarP:
    G: FiniteGroup
    points: list[frozenset]          # subsets containing e
    alpha: PartialActionAlg
    crossed: ReducedAlgebra
    generators: dict                 # t -> Lambda(1_t delta_t)

    @property
    def dims(self) -> dict:
        return {"X": len(self.points), "dim": self.crossed.dim}


def cstar_p_system(G: FiniteGroup) -> PartialActionAlg:
    _guard(G)
    X = _subsets(G, True)
    labels = tuple(subset_label(G, w) for w in X)
    A = FdCStar(labels, tuple(1 for _ in X))
    doms, maps = [], []
    for t in G:
        doms.append(frozenset(subset_label(G, w) for w in X if t in w))
    for t in G:
        src = [w for w in X if G.inv(t) in w]
        maps.append(PartialIsoAlg(A, A, {subset_label(G, w): subset_label(G, _translate(G, t, w)) for w in src}))
    return PartialActionAlg(G, A, tuple(doms), tuple(maps))


def cstar_p_space(G: FiniteGroup) -> PartialActionTop:
    """The same system as a discrete partial action on X (small groups only)."""
    if G.order > 4:
        raise ValueError("topological form limited to |G| <= 4")
    X = _subsets(G, True)
    pts = [subset_label(G, w) for w in X]
    doms = tuple(frozenset(subset_label(G, w) for w in X if t in w) for t in G)
    maps = tuple({subset_label(G, w): subset_label(G, _translate(G, t, w)) for w in X if G.inv(t) in w} for t in G)
    return PartialActionTop(G, FinTop.discrete(pts), doms, maps)


def cstar_p(G: FiniteGroup) -> CStarP:
    alpha = cstar_p_system(G)
    cp = crossed_product(alpha)
    B = cp.bundle
    gens = {t: regular_rep(point_section(B, t, alpha.A.unit(alpha.domains[t]))) for t in G}
    return CStarP(G, _subsets(G, True), alpha, cp, gens)


@dataclass(eq=False)
class CStarPEnvelope:
    G: FiniteGroup
    beta: PartialActionAlg
    witness: EnvelopeWitness
    crossed: ReducedAlgebra
    report: Report


def envelope_system(G: FiniteGroup) -> PartialActionAlg:
    _guard(G)
    Xt = _subsets(G, False)
    labels = tuple(subset_label(G, w) for w in Xt)
    B = FdCStar(labels, tuple(1 for _ in Xt))
    maps = [PartialIsoAlg(B, B, {subset_label(G, w): subset_label(G, _translate(G, t, w)) for w in Xt}) for t in G]
    return make_global(G, B, maps)


def envelope_of_cstar_p(G: FiniteGroup) -> CStarPEnvelope:
    alpha = cstar_p_system(G)
    beta = envelope_system(G)
    w = EnvelopeWitness(beta.A, beta, PartialIsoAlg(alpha.A, beta.A, {b: b for b in alpha.A.labels}))
    rep = Report()
    rep.extend(check_enveloping(alpha, w), prefix="envelope: ")
    cp = crossed_product(beta)
    Bb = cp.bundle
    unit_X = beta.A.unit(alpha.A.labels)
    p = regular_rep(point_section(Bb, G.e, unit_X))
    worst = 0.0
    for t in G:
        one_t = regular_rep(point_section(Bb, t, beta.A.unit()))
        ind_t = regular_rep(point_section(Bb, t, beta.A.unit(alpha.domains[t])))
        worst = max(worst, float(np.abs(p @ one_t @ p - ind_t).max()))
    rep.add("(1_X d_e)(1 d_t)(1_X d_e) = 1_t d_t", worst <= 1e-8, residual=worst)
    n = p.shape[0]
    corner = Subspace.span([(p @ x @ p).ravel() for x in cp.algebra.elements], n * n)
    rep.add("dim of the corner = dim C*_p", corner.dim == sum(len(d) for d in alpha.domains),
            detail={"corner": corner.dim})
    return CStarPEnvelope(G, beta, w, cp, rep)


# ---------------------------------------------------------------- the representation pi_u


def _projection(u: PartialRep, omega) -> np.ndarray:
    """P_omega = prod_{t in omega} e_t prod_{t not in omega} (1 - e_t)."""
    n = u.dim
    P = np.eye(n, dtype=complex)
    for t in u.G:
        et = u.e(t)
        P = P @ (et if t in omega else np.eye(n) - et)
    return P


@dataclass(eq=False)
class RepOfCStarP:
    prep: PartialRep
    system: PartialActionAlg
    report: Report
    projections: dict = field(default_factory=dict)   # label -> P_omega

    def apply(self, t: int, x: np.ndarray) -> np.ndarray:
        """pi_u(x delta_t) for x in C(X) supported in X_t."""
        A = self.system.A
        out = np.zeros((self.prep.dim, self.prep.dim), complex)
        for b in A.labels:
            c = A.block(x, b)[0, 0]
            if c != 0:
                out = out + c * self.projections[b]
        return out @ self.prep.u[t]


def rep_from_prep(u: PartialRep, tol: float = 1e-8) -> RepOfCStarP:
    G = u.G
    alpha = cstar_p_system(G)
    X = _subsets(G, True)
    projs = {subset_label(G, w): _projection(u, w) for w in X}
    pi = RepOfCStarP(u, alpha, Report(), projs)
    B = SemidirectBundle(alpha, check=False)
    rep = pi.report
    mul = star = 0.0
    for r in G:
        for x in B.basis(r):
            for s in G:
                for y in B.basis(s):
                    z = B.mul(r, x, s, y)
                    mul = max(mul, float(np.abs(pi.apply(G.mul(r, s), z) - pi.apply(r, x) @ pi.apply(s, y)).max()))
            star = max(star, float(np.abs(pi.apply(G.inv(r), B.star(r, x)) - adjoint(pi.apply(r, x))).max()))
    rep.add("pi_u multiplicative", mul <= tol, residual=mul)
    rep.add("pi_u *-preserving", star <= tol, residual=star)
    gen = max(float(np.abs(pi.apply(t, alpha.A.unit(alpha.domains[t])) - u.u[t]).max()) for t in G)
    rep.add("pi_u(1_t d_t) = u_t", gen <= tol, residual=gen)
    nd = float(np.abs(pi.apply(G.e, alpha.A.unit()) - np.eye(u.dim)).max())
    rep.add("pi_u(1 d_e) = 1", nd <= tol, residual=nd)
    return pi


# ---------------------------------------------------------------- dilation


@dataclass(eq=False)
class Dilation:
    prep: PartialRep
    dim: int
    u_tilde: list[np.ndarray]
    i: np.ndarray                   # isometry H -> H~
    report: Report

    @property
    def P(self) -> np.ndarray:
        return adjoint(self.i)


@dataclass(frozen=True, eq=False)
class _Structure:
    """Group data shared by every partial representation of G."""

    basis: tuple                    # (omega', t) with t in omega'
    gram: tuple                     # gram[a][b] = (fiber, {label of omega in X: coefficient}) or None
    left: tuple                     # left multiplication by 1 delta_t as index maps
    p_index: tuple                  # basis indices with t = e and e in omega'
    closed_form_defect: float


@lru_cache(maxsize=None)
def _structure(G: FiniteGroup) -> _Structure:
    beta = envelope_system(G)
    Bt = SemidirectBundle(beta, check=False)
    A = beta.A
    Xt = _subsets(G, False)
    basis = tuple((w, t) for w in Xt for t in G if t in w)
    index = {b: k for k, b in enumerate(basis)}
    elems = [A.unit([subset_label(G, w)]) for w, _ in basis]
    labels_X = {subset_label(G, w) for w in Xt if G.e in w}
    gram, worst = [], 0.0
    for (wa, ta), xa in zip(basis, elems):
        row = []
        for (wb, tb), xb in zip(basis, elems):
            f = G.mul(G.inv(ta), tb)
            z = Bt.mul(G.inv(ta), Bt.star(ta, xa), tb, xb)
            coeffs = {b: complex(A.block(z, b)[0, 0]) for b in A.labels if abs(A.block(z, b)[0, 0]) > 1e-12}
            if any(b not in labels_X for b in coeffs):
                raise AssertionError("x_a* x_b left the corner p B~ p")
            # closed form: [omega_a = omega_b] 1_{t_a^-1 omega_a} delta_{t_a^-1 t_b}
            expect = {subset_label(G, _translate(G, G.inv(ta), wa)): 1.0} if wa == wb else {}
            keys = set(coeffs) | set(expect)
            worst = max([worst] + [abs(coeffs.get(k, 0) - expect.get(k, 0)) for k in keys])
            row.append((f, coeffs))
        gram.append(tuple(row))
    left = []
    for t in G:
        left.append(tuple(index[(_translate(G, t, w), G.mul(t, s))] for w, s in basis))
    p_index = tuple(k for k, (w, t) in enumerate(basis) if t == G.e)
    return _Structure(basis, tuple(gram), tuple(left), p_index, worst)


def dilate(u: PartialRep, tol: float = 1e-8, rank_tol: float = 1e-9) -> Dilation:
    G = u.G
    _guard(G)
    rep = Report()
    rep.extend(validate_prep(u, tol), prefix="u: ")
    pi = rep_from_prep(u, tol)
    rep.extend(pi.report)
    S = _structure(G)
    rep.add("x_a* x_b matches the closed form", S.closed_form_defect <= 1e-12, residual=S.closed_form_defect)
    n, m = u.dim, len(S.basis)
    Gm = np.zeros((m * n, m * n), complex)
    for a in range(m):
        for b in range(m):
            f, coeffs = S.gram[a][b]
            if not coeffs:
                continue
            blk = sum((c * pi.projections[lab] for lab, c in coeffs.items()), np.zeros((n, n), complex)) @ u.u[f]
            Gm[a * n:(a + 1) * n, b * n:(b + 1) * n] = blk
    herm = float(np.abs(Gm - adjoint(Gm)).max())
    rep.add("Gram matrix hermitian", herm <= tol, residual=herm)
    w, V = np.linalg.eigh((Gm + adjoint(Gm)) / 2)
    top = max(1.0, float(np.abs(w).max()))
    rep.add("Gram matrix positive", w.min() >= -tol * top, residual=float(max(0.0, -w.min())))
    keep = w > rank_tol * top
    Phi = np.sqrt(w[keep])[:, None] * adjoint(V[:, keep])
    Phi_pinv = np.linalg.pinv(Phi)
    d = int(keep.sum())
    ut = []
    for t in G:
        Lt = np.zeros((m * n, m * n))
        for a, a2 in enumerate(S.left[t]):
            Lt[a2 * n:(a2 + 1) * n, a * n:(a + 1) * n] = np.eye(n)
        ut.append(Phi @ Lt @ Phi_pinv)
    # i(h) = [p (x) h], p = sum of 1_omega delta_e over omega containing e
    C = np.zeros((m * n, n), complex)
    for a in S.p_index:
        C[a * n:(a + 1) * n, :] = np.eye(n)
    i = Phi @ C
    unit = max(float(np.abs(adjoint(x) @ x - np.eye(d)).max()) for x in ut)
    hom = max(float(np.abs(ut[s] @ ut[t] - ut[G.mul(s, t)]).max()) for s in G for t in G)
    iso = float(np.abs(adjoint(i) @ i - np.eye(n)).max())
    comp = max(float(np.abs(u.u[t] - adjoint(i) @ ut[t] @ i).max()) for t in G)
    rep.add("u~_t unitary", unit <= tol, residual=unit)
    rep.add("u~ representation", hom <= tol, residual=hom)
    rep.add("i isometry", iso <= tol, residual=iso)
    rep.add("u_t = P u~_t i", comp <= tol, residual=comp)
    psd = psd_min_eigenvalue(u)
    rep.add("[u_{s^-1 t}] positive", psd >= -tol, residual=max(0.0, -psd))
    return Dilation(u, d, ut, i, rep)


def psd_min_eigenvalue(u: PartialRep) -> float:
    G, n = u.G, u.dim
    M = np.zeros((G.order * n, G.order * n), complex)
    for s in G:
        for t in G:
            M[s * n:(s + 1) * n, t * n:(t + 1) * n] = u.u[G.mul(G.inv(s), t)]
    return float(np.linalg.eigvalsh((M + adjoint(M)) / 2).min())
