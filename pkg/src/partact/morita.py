"""Ternary rings of operators and Morita equivalence of partial actions.

A tring is a space E of m x n matrices closed under (x, y, z) -> x y* z. Its
left algebra is span E E* (on C^m) and its right algebra span E* E (on C^n).
Partial actions on trings are stored like ``LinearPartialAction``: domain
subspaces of vec(m x n) plus linear maps that are meaningful on the source
domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np
import scipy.linalg

from .core import (
    MatrixStarAlgebra, Report, Subspace, adjoint, default_tol, pair_products, rank, regular_reps, spectral_norm,
    star_algebra_closure, wedderburn,
)
from .fellbundle import SemidirectBundle, SubBundle, Triple
from .kernels import KernelAlgebra, KernelLayout, beta_matrix, ideal_I, kernel_algebra, orbit_span
from .paction import (
    FunctionEnvelope, LinearPartialAction, PartialActionAlg, find_isomorphism, function_envelope_linear,
    DomainMap, domain_map_from_pairs, induced_block_action, linear_map_from_pairs, to_block_form, to_linear,
    validate_linear,
)
from .fdalg import action_defect, compose_partial_iso
from .finspace import enveloping_space
from .repcross import Section, section_basis


# ---------------------------------------------------------------- trings


@dataclass(frozen=True, eq=False)
class Tring:
    m: int
    n: int
    space: Subspace          # inside vec(m x n)

    @classmethod
    def from_span(cls, mats, m: int, n: int, tol: float | None = None) -> "Tring":
        return cls(m, n, Subspace.span([np.ravel(x) for x in mats], m * n, tol))

    @classmethod
    def zero(cls, m: int, n: int) -> "Tring":
        return cls(m, n, Subspace.zero(m * n))

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def elements(self) -> np.ndarray:
        return self.space.basis.reshape(-1, self.m, self.n)

    def contains(self, x: np.ndarray, tol: float = 1e-8) -> bool:
        return self.space.contains(np.ravel(x), tol)

    def random(self, rng: np.random.Generator) -> np.ndarray:
        c = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        return np.tensordot(c, self.elements, axes=1) if self.dim else np.zeros((self.m, self.n), complex)


def _off(S: Subspace, V: np.ndarray) -> float:
    """Largest distance from a row of V to S."""
    if not len(V):
        return 0.0
    return float(np.linalg.norm(V - (V @ np.conj(S.basis).T) @ S.basis, axis=1).max())


def ternary(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    return x @ adjoint(y) @ z


def tring_left_algebra(E: Tring, tol: float | None = None) -> MatrixStarAlgebra:
    gens = [x @ adjoint(y) for x in E.elements for y in E.elements]
    if not gens:
        return MatrixStarAlgebra(E.m, Subspace.zero(E.m * E.m))
    return star_algebra_closure(gens, tol)


def tring_right_algebra(E: Tring, tol: float | None = None) -> MatrixStarAlgebra:
    gens = [adjoint(x) @ y for x in E.elements for y in E.elements]
    if not gens:
        return MatrixStarAlgebra(E.n, Subspace.zero(E.n * E.n))
    return star_algebra_closure(gens, tol)


def adjoint_tring(E: Tring) -> Tring:
    return Tring.from_span([adjoint(x) for x in E.elements], E.n, E.m)


def validate_tring(E: Tring, rng: np.random.Generator | None = None, exact_limit: int = 10) -> Report:
    """Ternary closure, the cube identity and fullness over the derived algebras."""
    rng = rng or np.random.default_rng(7)
    rep = Report()
    X = E.elements
    if E.dim <= exact_limit:
        triples = [ternary(x, y, z) for x in X for y in X for z in X]
    else:
        triples = [ternary(E.random(rng), E.random(rng), E.random(rng)) for _ in range(3 * E.dim)]
    closure = max((E.space.residual(t.ravel()) for t in triples), default=0.0)
    rep.add("closed under x y* z", closure <= 1e-8, residual=closure)
    cube = 0.0
    for _ in range(4):
        x = E.random(rng)
        nx = spectral_norm(x)
        cube = max(cube, abs(spectral_norm(ternary(x, x, x)) - nx ** 3) / max(1.0, nx ** 3))
    rep.add("||(x,x,x)|| = ||x||^3", cube <= 1e-8, residual=cube)
    L, R = tring_left_algebra(E), tring_right_algebra(E)
    right_full = Tring.from_span([x @ b for x in X for b in R.elements], E.m, E.n).dim == E.dim
    left_full = Tring.from_span([a @ x for a in L.elements for x in X], E.m, E.n).dim == E.dim
    rep.add("E E^r = E", right_full)
    rep.add("E^l E = E", left_full)
    return rep


@dataclass(eq=False)
class TringHom:
    """The map induced on right algebras by a ternary homomorphism."""

    matrix: np.ndarray          # on vec(n x n) of E^r, meaningful on E^r
    source: MatrixStarAlgebra
    target: MatrixStarAlgebra
    report: Report

    def apply(self, a: np.ndarray) -> np.ndarray:
        k = self.target.n
        return (self.matrix @ np.ravel(a)).reshape(k, k)


def tring_hom_right(E: Tring, F: Tring, images, rng: np.random.Generator | None = None) -> TringHom:
    """``images[i]`` is the image in F of the i-th basis element of E."""
    rng = rng or np.random.default_rng(8)
    X, Y = list(E.elements), [np.asarray(y) for y in images]
    if len(X) != len(Y):
        raise ValueError("one image per basis element")
    rep = Report()
    worst = 0.0
    for i, j, k in product(range(len(X)), repeat=3):
        img = _combine(Y, E.space.coords(ternary(X[i], X[j], X[k]).ravel()), F)
        worst = max(worst, float(np.abs(img - ternary(Y[i], Y[j], Y[k])).max()))
    rep.add("ternary", worst <= 1e-8, residual=worst)
    if worst > 1e-8:
        raise ValueError("map does not preserve the ternary product")
    src, dst = tring_right_algebra(E), tring_right_algebra(F)
    xs = [adjoint(x) @ y for x in X for y in X]
    ys = [adjoint(x) @ y for x in Y for y in Y]
    if xs:
        L, ok = linear_map_from_pairs(xs, ys)
    else:
        L, ok = np.zeros((F.n * F.n, E.n * E.n), complex), True
    rep.add("well defined", ok)
    hom = TringHom(L, src, dst, rep)
    contr = 0.0
    for _ in range(4):
        if src.dim == 0:
            break
        a = src.random_element(rng)
        contr = max(contr, spectral_norm(hom.apply(a)) - spectral_norm(a))
    rep.add("contractive", contr <= 1e-8, residual=max(contr, 0.0))
    pi_inj = rank(np.array([y.ravel() for y in Y])) == E.dim if Y else True
    r_inj = rank(np.array([hom.apply(a).ravel() for a in src.elements])) == src.dim if src.dim else True
    rep.add("pi injective iff pi^r injective", pi_inj == r_inj, detail={"pi": pi_inj, "pi_r": r_inj})
    return hom


def _combine(Y, coeffs, F: Tring) -> np.ndarray:
    if not len(Y):
        return np.zeros((F.m, F.n), complex)
    return np.tensordot(coeffs, np.array(Y), axes=1)


# ---------------------------------------------------------------- linking algebra and Rieffel


@dataclass(eq=False)
class LinkingAlgebra:
    algebra: MatrixStarAlgebra
    p_left: np.ndarray
    p_right: np.ndarray
    report: Report


def _embed(m: int, n: int, x: np.ndarray, where: str) -> np.ndarray:
    out = np.zeros((m + n, m + n), complex)
    if where == "ll":
        out[:m, :m] = x
    elif where == "lr":
        out[:m, m:] = x
    elif where == "rl":
        out[m:, :m] = x
    else:
        out[m:, m:] = x
    return out


def linking_algebra(E: Tring, left: MatrixStarAlgebra | None = None,
                    right: MatrixStarAlgebra | None = None) -> LinkingAlgebra:
    """[[E^l, E], [E*, E^r]]; explicit corner algebras may be given when E = 0."""
    m, n = E.m, E.n
    left = tring_left_algebra(E) if left is None else left
    right = tring_right_algebra(E) if right is None else right
    gens = ([_embed(m, n, a, "ll") for a in left.elements] + [_embed(m, n, x, "lr") for x in E.elements]
            + [_embed(m, n, adjoint(x), "rl") for x in E.elements] + [_embed(m, n, b, "rr") for b in right.elements])
    N = m + n
    span = Subspace.span([g.ravel() for g in gens], N * N)
    alg = star_algebra_closure(gens) if gens else MatrixStarAlgebra(N, Subspace.zero(N * N))
    p = _embed(m, n, np.eye(m), "ll")
    q = _embed(m, n, np.eye(n), "rr")
    rep = Report()
    rep.add("span of the four corners is an algebra", alg.dim == span.dim, detail={"span": span.dim, "closure": alg.dim})
    rep.add("p L p = E^l", Subspace.span([(p @ x @ p).ravel() for x in alg.elements], N * N).dim == left.dim)
    rep.add("q L q = E^r", Subspace.span([(q @ x @ q).ravel() for x in alg.elements], N * N).dim == right.dim)
    rep.add("p L q = E", Subspace.span([(p @ x @ q).ravel() for x in alg.elements], N * N).dim == E.dim)
    return LinkingAlgebra(alg, p, q, rep)


def rieffel(E: Tring, ideal: Subspace) -> Subspace:
    """R(I) = span <E I, E I>_l = span x a y* inside vec(m x m)."""
    n = E.n
    mats = ideal.basis.reshape(-1, n, n) if ideal.dim else []
    return Subspace.span([(x @ a @ adjoint(y)).ravel() for x in E.elements for a in mats for y in E.elements],
                         E.m * E.m)


def _block_ideals(alg: MatrixStarAlgebra) -> list[tuple[frozenset, Subspace]]:
    """All ideals of a concrete algebra, indexed by subsets of its simple summands."""
    W = wedderburn(alg)
    n = alg.n
    k = len(W.blocks)
    out = []
    for size in range(k + 1):
        for S in combinations(range(k), size):
            p = sum((W.projections[i] for i in S), np.zeros((n, n), complex))
            out.append((frozenset(S), Subspace.span([(p @ x).ravel() for x in alg.elements], n * n)))
    return out


def rieffel_lattice_check(E: Tring) -> Report:
    """R is a bijective, order- and meet-preserving map between ideal lattices."""
    L, R = tring_left_algebra(E), tring_right_algebra(E)
    right_ideals = _block_ideals(R)
    left_ideals = _block_ideals(L)
    images = {S: rieffel(E, I) for S, I in right_ideals}
    rep = Report()
    matched = {}
    for S, J in images.items():
        hit = [T for T, K in left_ideals if K.equals(J, 1e-7)]
        matched[S] = hit[0] if hit else None
    rep.add("R(I) is an ideal of E^l", all(v is not None for v in matched.values()))
    rep.add("R is injective", len({v for v in matched.values()}) == len(matched))
    rep.add("R is onto", len(right_ideals) == len(left_ideals))
    order = all((matched[S] <= matched[T]) == (S <= T) for S in matched for T in matched
                if matched[S] is not None and matched[T] is not None)
    rep.add("R preserves order both ways", order)
    meets = all(matched[S & T] == (matched[S] & matched[T]) for S in matched for T in matched
                if None not in (matched[S], matched[T], matched[S & T]))
    rep.add("R preserves meets", meets)
    rep.add("R(E^r) = E^l", images[max(images, key=len)].equals(L.space, 1e-7) if images else True)
    return rep


# ---------------------------------------------------------------- partial actions on trings


@dataclass(frozen=True, eq=False)
class TringPartialAction:
    G: object
    E: Tring
    domains: tuple[Subspace, ...]
    maps: tuple[DomainMap, ...]         # gamma_t, known on E_t^-1

    def apply(self, t: int, x: np.ndarray) -> np.ndarray:
        return (self.maps[t] @ np.ravel(x)).reshape(self.E.m, self.E.n)

    def domain_basis(self, t: int) -> np.ndarray:
        return self.domains[t].basis.reshape(-1, self.E.m, self.E.n)


def tring_action_from_pairs(G, E: Tring, domains, pairs) -> tuple[TringPartialAction, bool]:
    """Maps from (source, image) lists per group element."""
    maps, ok = [], True
    for t in G:
        xs, ys = pairs[t]
        L, good = domain_map_from_pairs(domains[G.inv(t)], xs, ys)
        ok &= good
        maps.append(L)
    return TringPartialAction(G, E, tuple(domains), tuple(maps)), ok


def validate_tring_action(gamma: TringPartialAction, tol: float = 1e-8,
                          rng: np.random.Generator | None = None) -> Report:
    rng = rng or np.random.default_rng(9)
    G, E = gamma.G, gamma.E
    m, n = E.m, E.n
    rep = Report()
    rep.add("E_e = E", gamma.domains[G.e].equals(E.space, 1e-7))
    X = E.elements
    ide = float(np.abs(gamma.maps[G.e].rows(E.space.basis) - E.space.basis).max()) if E.dim else 0.0
    rep.add("gamma_e = id", ide <= tol, residual=ide)
    sub = tern = inv = img = ext = 0.0
    # x y* d and d x* y: the first two factors range over E E* and E* E
    Xs = np.conj(np.transpose(X, (0, 2, 1)))
    left = Subspace.span(pair_products(X, Xs).reshape(-1, m * m), m * m).basis.reshape(-1, m, m)
    right = Subspace.span(pair_products(Xs, X).reshape(-1, n * n), n * n).basis.reshape(-1, n, n)
    for t in G:
        Dt = gamma.domain_basis(t)
        if len(Dt):
            V = np.concatenate([pair_products(left, Dt).reshape(-1, m * n),
                                pair_products(Dt, right).reshape(-1, m * n)])
            sub = max(sub, _off(gamma.domains[t], V))
        ti = G.inv(t)
        Db = gamma.domain_basis(ti)
        if gamma.domains[t].dim != gamma.domains[ti].dim:
            img = max(img, 1.0)
        if not len(Db):
            continue
        flat = Db.reshape(len(Db), -1)
        imgs = gamma.maps[t].rows(flat)
        img = max(img, _off(gamma.domains[t], imgs))
        inv = max(inv, float(np.abs(gamma.maps[ti].rows(imgs) - flat).max()))
        dom = Tring(m, n, gamma.domains[ti])
        for _ in range(3):
            x, y, z = dom.random(rng), dom.random(rng), dom.random(rng)
            d = gamma.apply(t, ternary(x, y, z)) - ternary(gamma.apply(t, x), gamma.apply(t, y), gamma.apply(t, z))
            tern = max(tern, float(np.abs(d).max()))
        for s in G:
            common = gamma.domains[t].meet(gamma.domains[G.inv(s)], 1e-7)
            if common.dim:
                Y = common.basis
                ext = max(ext, float(np.abs(gamma.maps[G.mul(s, t)].rows(gamma.maps[ti].rows(Y))
                                            - gamma.maps[s].rows(Y)).max()))
    rep.add("E_t are sub-bimodules", sub <= tol, residual=sub)
    rep.add("gamma_t maps E_t^-1 into E_t", img <= tol, residual=img)
    rep.add("gamma_t^-1 inverts gamma_t", inv <= tol, residual=inv)
    rep.add("gamma_t preserves the ternary product", tern <= tol, residual=tern)
    rep.add("gamma_st extends gamma_s gamma_t", ext <= tol, residual=ext)
    return rep


@dataclass(eq=False)
class DerivedActions:
    left: LinearPartialAction
    right: LinearPartialAction
    report: Report


def derived_actions(gamma: TringPartialAction) -> DerivedActions:
    """gamma^l on span E E* and gamma^r on span E* E."""
    G, E = gamma.G, gamma.E
    rep = Report()
    Lalg, Ralg = tring_left_algebra(E), tring_right_algebra(E)
    out = {}
    for side, alg, k in (("left", Lalg, E.m), ("right", Ralg, E.n)):
        def ip(x, y):
            return x @ adjoint(y) if side == "left" else adjoint(x) @ y
        doms, maps, ok = [], [], True
        for t in G:
            Dt = gamma.domain_basis(t)
            doms.append(Subspace.span([ip(x, y).ravel() for x in Dt for y in Dt], k * k))
        for t in G:
            Db = gamma.domain_basis(G.inv(t))
            xs = [ip(x, y) for x in Db for y in Db]
            ys = [ip(gamma.apply(t, x), gamma.apply(t, y)) for x in Db for y in Db]
            L, good = domain_map_from_pairs(doms[G.inv(t)], xs, ys)
            ok &= good
            maps.append(L)
        rep.add(f"gamma^{side[0]} well defined", ok)
        lin = LinearPartialAction(G, alg, tuple(doms), tuple(maps))
        rep.extend(validate_linear(lin), prefix=f"gamma^{side[0]}: ")
        out[side] = lin
    return DerivedActions(out["left"], out["right"], rep)


def check_morita_equiv(alpha: PartialActionAlg, beta: PartialActionAlg, gamma: TringPartialAction) -> Report:
    """gamma^l is isomorphic to alpha and gamma^r to beta."""
    rep = Report()
    rep.extend(validate_tring_action(gamma), prefix="gamma: ")
    if not rep.ok:
        return rep
    der = derived_actions(gamma)
    rep.extend(der.report)
    if not der.report.ok:
        return rep
    for side, lin, target in (("left", der.left, alpha), ("right", der.right, beta)):
        if lin.alg.dim == 0 or target.A.dim == 0:
            rep.add(f"gamma^{side[0]} isomorphic to target", lin.alg.dim == target.A.dim)
            continue
        block, _ = to_block_form(lin, prefix="m")
        iso = find_isomorphism(block, target)
        rep.add(f"gamma^{side[0]} isomorphic to target", iso is not None)
    return rep


def identity_equivalence(alpha: PartialActionAlg) -> TringPartialAction:
    """A as a bimodule over itself with the action alpha."""
    lin = to_linear(alpha)
    n = alpha.A.hdim
    return TringPartialAction(alpha.G, Tring(n, n, lin.alg.space), lin.domains, lin.maps)


def adjoint_action(gamma: TringPartialAction) -> TringPartialAction:
    """The action x* -> gamma_t(x)* on E*."""
    G, E = gamma.G, gamma.E
    Es = adjoint_tring(E)
    doms = [Subspace.span([adjoint(x).ravel() for x in gamma.domain_basis(t)], E.m * E.n) for t in G]
    pairs = {t: ([adjoint(x) for x in gamma.domain_basis(G.inv(t))],
                 [adjoint(gamma.apply(t, x)) for x in gamma.domain_basis(G.inv(t))]) for t in G}
    act, ok = tring_action_from_pairs(G, Es, doms, pairs)
    if not ok:
        raise AssertionError("adjoint action ill defined")
    return act


@dataclass(eq=False)
class Composite:
    action: TringPartialAction
    report: Report


def compose_equivalences(g1: TringPartialAction, g2: TringPartialAction) -> Composite:
    """E1 (x)_B E2 realised as span{x1 x2}, with (mu (x) nu)(x1 x2) = mu(x1) nu(x2).

    Requires E1^r and E2^l to be the same concrete algebra with the same
    action. The dimension is cross-checked against the rank of the
    trace-Gram matrix of the balanced semi-inner product.
    """
    G = g1.G
    E1, E2 = g1.E, g2.E
    if E1.n != E2.m:
        raise ValueError("middle carriers differ")
    d1, d2 = derived_actions(g1), derived_actions(g2)
    if not d1.right.alg.space.equals(d2.left.alg.space, 1e-7):
        raise ValueError("middle algebras differ")
    rep = Report()
    mid = 0.0
    for t in G:
        if not d1.right.domains[t].equals(d2.left.domains[t], 1e-7):
            mid = max(mid, 1.0)
        for x in d1.right.domain_basis(G.inv(t)):
            mid = max(mid, float(np.abs(d1.right.apply(t, x) - d2.left.apply(t, x)).max()))
    rep.add("middle actions agree", mid <= 1e-8, residual=mid)
    if mid > 1e-8:
        raise ValueError("middle actions differ")
    X1, X2 = E1.elements, E2.elements
    prods = [x1 @ x2 for x1 in X1 for x2 in X2]
    E = Tring.from_span(prods, E1.m, E2.n) if prods else Tring.zero(E1.m, E2.n)
    # <x1 (x) x2, y1 (x) y2> = <x2, <x1, y1>_B y2>_C, traced
    pairs = [(x1, x2) for x1 in X1 for x2 in X2]
    gram = np.array([[np.trace(adjoint(a2) @ ((adjoint(a1) @ b1) @ b2)) for b1, b2 in pairs] for a1, a2 in pairs]) \
        if pairs else np.zeros((0, 0))
    r = rank(gram) if pairs else 0
    rep.add("quotient rank = dim of products", r == E.dim, detail={"gram rank": r, "dim": E.dim})
    doms, pairs_t = [], {}
    for t in G:
        A1, A2 = g1.domain_basis(t), g2.domain_basis(t)
        doms.append(Subspace.span([(a @ b).ravel() for a in A1 for b in A2], E.m * E.n))
        B1, B2 = g1.domain_basis(G.inv(t)), g2.domain_basis(G.inv(t))
        pairs_t[t] = ([a @ b for a in B1 for b in B2], [g1.apply(t, a) @ g2.apply(t, b) for a in B1 for b in B2])
    act, ok = tring_action_from_pairs(G, E, doms, pairs_t)
    rep.add("tensor action well defined", ok)
    rep.extend(validate_tring_action(act), prefix="composite: ")
    return Composite(act, rep)


# ---------------------------------------------------------------- Morita enveloping action


@dataclass(eq=False)
class MoritaEnvelope:
    alpha: PartialActionAlg
    bundle: SemidirectBundle
    kernels: KernelAlgebra
    ideal: Subspace              # I(B) in kernel coordinates
    gamma: TringPartialAction    # on E = L2(B), realised as maps K -> l2(G) (x) K
    derived: DerivedActions
    report: Report

    @property
    def dims(self) -> dict:
        return {"dim_k": self.kernels.dim, "dim_I": self.ideal.dim, "dim_E": self.gamma.E.dim}

    def rho(self, t: int) -> np.ndarray:
        _, rho = regular_reps(self.alpha.G)
        return np.kron(rho[t], np.eye(self.bundle.carrier_dim))


def section_operator(B: SemidirectBundle, xi: Section) -> np.ndarray:
    """T_xi h = (pi(xi(r)) h)_r, so T_xi* T_eta = pi(<xi, eta>_r) and T_xi T_eta* = pi_c(<xi, eta>_l)."""
    return np.vstack([B.pi(r, xi(r)) for r in B.G])


def morita_envelope(alpha: PartialActionAlg) -> MoritaEnvelope:
    B = SemidirectBundle(alpha)
    G, A = alpha.G, alpha.A
    n = B.carrier_dim
    N = G.order * n
    rep = Report()
    ka = kernel_algebra(B)
    rep.extend(ka.report, prefix="k(B): ")
    layout = ka.layout
    I = ideal_I(B, layout)
    sections = section_basis(B)
    E = Tring.from_span([section_operator(B, f) for f in sections], N, n)
    rep.add("dim E = sum of fiber dims", E.dim == B.total_dim(), detail={"dim E": E.dim})

    def support_sections(t):
        # xi(r) in D_r & D_rt for every r
        out = []
        for r in G:
            labels = alpha.domains[r] & alpha.domains[G.mul(r, t)]
            for m in A.basis(labels):
                vals = [B.zero(s) for s in G]
                vals[r] = m
                out.append(Section(B, tuple(vals)))
        return out

    doms = []
    for t in G:
        by_support = Subspace.span([section_operator(B, f).ravel() for f in support_sections(t)], N * n)
        # E_t = span E D_t, with (xi a)(r) = xi(r) a
        prods = []
        for f in sections:
            for a in A.basis(alpha.domains[t]):
                vals = tuple(B.mul(r, f(r), G.e, a) for r in G)
                prods.append(section_operator(B, Section(B, vals)).ravel())
        by_product = Subspace.span(prods, N * n)
        rep.add(f"E_{G.label(t)} by support = E D_t", by_support.equals(by_product, 1e-8))
        doms.append(by_product)
    pairs = {}
    for t in G:
        src = support_sections(G.inv(t))
        xs, ys = [], []
        for f in src:
            moved = tuple(f(G.mul(r, t)) for r in G)
            xs.append(section_operator(B, f))
            ys.append(section_operator(B, Section(B, moved)))
        pairs[t] = (xs, ys)
    gamma, ok = tring_action_from_pairs(G, E, doms, pairs)
    rep.add("gamma well defined", ok)
    rep.extend(validate_tring_action(gamma), prefix="gamma: ")
    der = derived_actions(gamma)
    rep.extend(der.report)
    # gamma^r is alpha carried to pi(A)
    rep.add("E^r = pi(A)", der.right.alg.dim == A.dim)
    right_block, _ = to_block_form(der.right, prefix="r")
    iso = find_isomorphism(right_block, alpha)
    res = np.inf
    if iso is not None:
        res = 0.0
        for t in G:
            lhs = compose_partial_iso(iso, right_block.maps[t])
            rhs = compose_partial_iso(alpha.maps[t], iso).restrict(right_block.maps[t].sigma)
            res = max(res, action_defect(lhs, rhs, right_block.maps[t].sigma))
    rep.add("gamma^r isomorphic to alpha", iso is not None and res <= 1e-8, residual=float(res))
    # gamma^l is the natural action on pi_c(I)
    imgs = np.array(ka.images)
    piI = Subspace.span([np.tensordot(v, imgs, axes=1).ravel() for v in I.basis], N * N) if I.dim else \
        Subspace.zero(N * N)
    rep.add("E^l = pi_c(I)", der.left.alg.space.equals(piI, 1e-7), detail={"E^l": der.left.alg.dim, "I": I.dim})
    lres = 0.0
    for t in G:
        bt = beta_matrix(B, t, layout)
        It = I.meet(Subspace.span([bt @ v for v in I.basis], layout.dim)) if I.dim else I
        piIt = Subspace.span([np.tensordot(v, imgs, axes=1).ravel() for v in It.basis], N * N)
        if not der.left.domains[t].equals(piIt, 1e-7):
            lres = max(lres, 1.0)
        _, rho = regular_reps(G)
        R = np.kron(rho[t], np.eye(n))
        for x in der.left.domain_basis(G.inv(t)):
            lres = max(lres, float(np.abs(der.left.apply(t, x) - R @ x @ adjoint(R)).max()))
    rep.add("gamma^l = natural action on I", lres <= 1e-8, residual=lres)
    span = orbit_span(B, I)
    rep.add("span of the orbit of I = k(B)", span.dim == layout.dim,
            detail={"orbit_span_dim": span.dim, "dim_k": layout.dim})
    return MoritaEnvelope(alpha, B, ka, I, gamma, der, rep)


# ---------------------------------------------------------------- uniqueness


@dataclass(eq=False)
class GlobalEquivalence:
    """A global tring action mu_t(m) = R1_t m R2_t* linking two global systems."""

    tring: Tring
    left: MatrixStarAlgebra
    right: MatrixStarAlgebra
    action: TringPartialAction
    report: Report


def _intertwiner(src: list[np.ndarray], dst: list[np.ndarray], rng: np.random.Generator) -> np.ndarray:
    """An isometry W with W src_i = dst_i W, from a generic intertwiner."""
    n, N = src[0].shape[0], dst[0].shape[0]
    eqs = [np.kron(np.eye(N), s.T) - np.kron(d, np.eye(n)) for s, d in zip(src, dst)]
    M = np.vstack(eqs)
    _, s, vh = np.linalg.svd(M)
    null = np.conj(vh[np.sum(s > 1e-9 * max(1.0, s[0])):]).T
    if null.shape[1] == 0:
        raise ValueError("no intertwiner")
    X = (null @ (rng.standard_normal(null.shape[1]) + 1j * rng.standard_normal(null.shape[1]))).reshape(N, n)
    W, _ = scipy.linalg.polar(X)
    return W


def envelope_unique_check(alpha: PartialActionAlg, env: MoritaEnvelope | None = None,
                          fe: FunctionEnvelope | None = None,
                          rng: np.random.Generator | None = None) -> GlobalEquivalence:
    """Morita equivalence between the kernel envelope (k(B), natural action)
    and the envelope of alpha inside functions G -> A.

    The two partial equivalences with alpha are composed through alpha into a
    partial equivalence F between the ideals; its orbit under the implementing
    unitaries (rho (x) 1 on one side, lambda (x) 1 on the other) is the global
    tring.
    """
    rng = rng or np.random.default_rng(31)
    env = env or morita_envelope(alpha)
    lin = to_linear(alpha)
    fe = fe or function_envelope_linear(lin)
    G = alpha.G
    B = env.bundle
    K = B.carrier_dim
    # second witness: phi(A) W : K -> l2(G) (x) C^n, where W intertwines the
    # regular representation on K with the covariant pair (phi, lambda)
    basis = lin.alg.elements
    R2 = fe.implementers
    src = [B.pi(t, x) for t in G for x in B.basis(t)]
    dst = [fe.phi(x) @ R2[t] for t in G for x in B.basis(t)]
    W = _intertwiner(src, dst, rng)
    rep = Report()
    wres = float(np.abs(adjoint(W) @ W - np.eye(K)).max())
    rep.add("W isometry", wres <= 1e-8, residual=wres)
    N2 = fe.beta.alg.n
    E2 = Tring.from_span([fe.phi(a) @ W for a in basis], N2, K)
    doms2 = [Subspace.span([(fe.phi(a) @ W).ravel() for a in lin.domain_basis(t)], N2 * K) for t in G]
    pairs2 = {t: ([fe.phi(a) @ W for a in lin.domain_basis(G.inv(t))],
                  [fe.phi(lin.apply(t, a)) @ W for a in lin.domain_basis(G.inv(t))]) for t in G}
    g2, ok = tring_action_from_pairs(G, E2, doms2, pairs2)
    rep.add("second witness well defined", ok)
    comp = compose_equivalences(env.gamma, adjoint_action(g2))
    rep.extend(comp.report, prefix="F: ")
    F = comp.action
    N1 = F.E.m
    R1 = [env.rho(t) for t in G]
    impl = 0.0
    for t in G:
        for x in F.domain_basis(G.inv(t)):
            impl = max(impl, float(np.abs(F.apply(t, x) - R1[t] @ x @ adjoint(R2[t])).max()))
    rep.add("F action implemented by the unitaries", impl <= 1e-8, residual=impl)
    M = Tring.from_span([R1[t] @ x @ adjoint(R2[t]) for t in G for x in F.E.elements], N1, N2)
    supers = tuple(DomainMap.conjugation(R1[t], R2[t], M.space, (N1, N2)) for t in G)
    mu = TringPartialAction(G, M, tuple(M.space for _ in G), supers)
    rep.extend(validate_tring(M), prefix="M: ")
    rep.extend(validate_tring_action(mu), prefix="mu: ")
    left, right = tring_left_algebra(M), tring_right_algebra(M)
    kimgs = Subspace.span([m.ravel() for m in env.kernels.images], N1 * N1)
    rep.add("M M* spans k(B)", left.space.equals(kimgs, 1e-7), detail={"left": left.dim, "k": kimgs.dim})
    rep.add("M* M spans the function envelope", right.space.equals(fe.beta.alg.space, 1e-7),
            detail={"right": right.dim, "B": fe.beta.alg.dim})
    if rep.ok:
        kspace = left.space
        natural = LinearPartialAction(G, left, tuple(kspace for _ in G), tuple(DomainMap.conjugation(r, r, kspace, (N1, N1)) for r in R1))
        nat_block, _ = to_block_form(natural, prefix="k")
        fun_block, _ = to_block_form(fe.beta, prefix="f")
        rep.extend(check_morita_equiv(nat_block, fun_block, mu), prefix="global: ")
    return GlobalEquivalence(M, left, right, mu, rep)


# ---------------------------------------------------------------- kernels of a triple


@dataclass(eq=False)
class KernelTriple:
    dims: dict
    full: bool
    report: Report


def _sub_kernels(X: SubBundle, layout: KernelLayout) -> Subspace:
    return layout.direct_sum({rs: X.fibers[layout.fiber[rs]] for rs in layout.slices})


def kernels_morita_triple(tr: Triple) -> KernelTriple:
    """k(A), k(E) inside k(B): span identities and invariance of k(E)."""
    if not tr.report.ok:
        raise ValueError("triple fails its containment checks")
    B = tr.B
    ka = kernel_algebra(B)
    layout = ka.layout
    imgs = np.array(ka.images)
    N = imgs.shape[1]

    def mats(S):
        return [np.tensordot(v, imgs, axes=1) for v in S.basis]

    kA, kE = _sub_kernels(tr.A, layout), _sub_kernels(tr.E, layout)
    MA, ME, MB = mats(kA), mats(kE), list(imgs)

    def span(ms):
        return Subspace.span([m.ravel() for m in ms], N * N)

    SA, SE, SB = span(MA), span(ME), span(MB)
    rep = Report()
    rep.add("k(A) k(E) <= k(E)", SE.contains_all([(a @ x).ravel() for a in MA for x in ME], 1e-8))
    rep.add("k(E) k(B) <= k(E)", SE.contains_all([(x @ b).ravel() for x in ME for b in MB], 1e-8))
    rep.add("span k(E) k(E)* = k(A)", span([x @ adjoint(y) for x in ME for y in ME]).equals(SA, 1e-8))
    full = span([adjoint(x) @ y for x in ME for y in ME]).equals(SB, 1e-8)
    inv = all(kE.equals(Subspace.span([beta_matrix(B, t, layout) @ v for v in kE.basis], layout.dim), 1e-8)
              if kE.dim else True for t in B.G)
    rep.add("k(E) invariant under the natural action", inv)
    rep.add("k(A) k(B) k(A) <= k(A)", SA.contains_all([(a @ b @ c).ravel() for a in MA for b in MB for c in MA], 1e-8))
    return KernelTriple({"k(A)": kA.dim, "k(E)": kE.dim, "k(B)": layout.dim}, full, rep)


# ---------------------------------------------------------------- induced spectrum


@dataclass(eq=False)
class GSetIso:
    mapping: dict
    report: Report


def _orbit_iso(G, X: list, act_x, Y: list, act_y) -> dict | None:
    """Explicit isomorphism of finite G-sets by matching orbit stabilisers."""
    if len(X) != len(Y):
        return None
    done_y: set = set()
    out = {}
    for x in X:
        if x in out:
            continue
        stab = frozenset(t for t in G if act_x(t, x) == x)
        match = None
        for y in Y:
            if y in done_y:
                continue
            if frozenset(t for t in G if act_y(t, y) == y) == stab:
                match = y
                break
        if match is None:
            return None
        for t in G:
            a, b = act_x(t, x), act_y(t, match)
            if a in out and out[a] != b:
                return None
            out[a] = b
            done_y.add(b)
    ok = all(out[act_x(t, x)] == act_y(t, out[x]) for t in G for x in X)
    return out if ok and len(set(out.values())) == len(Y) else None


def induced_spectrum_envelope(alpha: PartialActionAlg) -> GSetIso:
    """The enveloping G-set of the block action of alpha versus the blocks of
    k(B) permuted by the natural action."""
    G = alpha.G
    rep = Report()
    env = enveloping_space(induced_block_action(alpha))
    pts = list(env.space.points)

    def act_x(t, x):
        return env.action.maps[t][x]

    B = SemidirectBundle(alpha)
    ka = kernel_algebra(B)
    W = wedderburn(ka.algebra)
    rep.add("wedderburn clean", not W.diagnostics, detail=W.diagnostics or None)
    _, rho = regular_reps(G)
    n = B.carrier_dim
    perm = {}
    for t in G:
        R = np.kron(rho[t], np.eye(n))
        for i, P in enumerate(W.projections):
            Q = R @ P @ adjoint(R)
            hits = [j for j, P2 in enumerate(W.projections) if np.abs(Q - P2).max() < 1e-6]
            perm[(t, i)] = hits[0] if len(hits) == 1 else None
    rep.add("natural action permutes the blocks", all(v is not None for v in perm.values()))
    if not rep.ok:
        return GSetIso({}, rep)
    ys = list(range(len(W.projections)))
    rep.add("same number of points", len(pts) == len(ys), detail={"envelope": len(pts), "blocks": len(ys)})
    mapping = _orbit_iso(G, pts, act_x, ys, lambda t, i: perm[(t, i)])
    rep.add("G-sets isomorphic", mapping is not None)
    return GSetIso(mapping or {}, rep)
