"""The algebra of kernels k(B), its natural G-action and the ideal I(B).

A kernel is an array k(r, s) with k(r, s) in B_{rs^-1}; it is stored as fiber
coordinates. Flattened kernel coordinates list the (r, s) entries in row-major
order over G x G, each in the coordinates of its fiber.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Sequence

import numpy as np

from .core import (
    MatrixStarAlgebra, Report, Subspace, adjoint, default_tol, rank, regular_reps, spectral_norm,
    star_algebra_closure, wedderburn,
)
from .fellbundle import FellBundle, SemidirectBundle, SubBundle
from .paction import EnvelopeWitness, PartialActionAlg
from .repcross import Section, _root, pi_lambda, random_section


class KernelLayout:
    """Offsets of the (r, s) entries inside flattened kernel coordinates."""

    def __init__(self, B: FellBundle):
        self.B = B
        G = B.G
        self.fiber = {}
        self.slices = {}
        k = 0
        for r, s in product(G, G):
            t = G.mul(r, G.inv(s))
            d = B.fiber_dim(t)
            self.fiber[(r, s)] = t
            self.slices[(r, s)] = slice(k, k + d)
            k += d
        self.dim = k

    def direct_sum(self, parts: dict) -> Subspace:
        """Subspace from per-entry subspaces (missing entries are zero)."""
        rows = []
        for (r, s), sl in self.slices.items():
            sub = parts.get((r, s))
            if sub is None or sub.dim == 0:
                continue
            pad = np.zeros((sub.dim, self.dim), dtype=complex)
            pad[:, sl] = sub.basis
            rows.append(pad)
        if not rows:
            return Subspace.zero(self.dim)
        return Subspace(np.vstack(rows), self.dim)


@dataclass(frozen=True, eq=False)
class Kernel:
    bundle: FellBundle
    entries: dict          # (r, s) -> coordinates in B_{rs^-1}

    def __call__(self, r: int, s: int):
        B = self.bundle
        return B.from_coords(B.G.mul(r, B.G.inv(s)), self.entries[(r, s)])

    def coords(self) -> np.ndarray:
        G = self.bundle.G
        parts = [self.entries[(r, s)] for r, s in product(G, G)]
        return np.concatenate(parts).astype(complex) if parts else np.zeros(0, complex)

    def __add__(self, other: "Kernel") -> "Kernel":
        return Kernel(self.bundle, {k: v + other.entries[k] for k, v in self.entries.items()})

    def scale(self, c: complex) -> "Kernel":
        return Kernel(self.bundle, {k: c * v for k, v in self.entries.items()})


def kernel_from_coords(B: FellBundle, v: np.ndarray, layout: KernelLayout | None = None) -> Kernel:
    layout = layout or KernelLayout(B)
    return Kernel(B, {rs: np.asarray(v[sl], dtype=complex) for rs, sl in layout.slices.items()})


def kernel_from_function(B: FellBundle, k) -> Kernel:
    """Kernel from a callable (r, s) -> element of B_{rs^-1}."""
    G = B.G
    return Kernel(B, {(r, s): B.coords(G.mul(r, G.inv(s)), k(r, s)) for r, s in product(G, G)})


def zero_kernel(B: FellBundle) -> Kernel:
    G = B.G
    return Kernel(B, {(r, s): np.zeros(B.fiber_dim(G.mul(r, G.inv(s))), complex) for r, s in product(G, G)})


def random_kernel(B: FellBundle, rng: np.random.Generator) -> Kernel:
    layout = KernelLayout(B)
    return kernel_from_coords(B, rng.standard_normal(layout.dim) + 1j * rng.standard_normal(layout.dim), layout)


def _check_same(k1: Kernel, k2: Kernel):
    if k1.bundle is not k2.bundle:
        raise ValueError("kernels over different bundles")


def k_mul(k1: Kernel, k2: Kernel) -> Kernel:
    """(k1 * k2)(r, s) = sum_t k1(r, t) k2(t, s)."""
    _check_same(k1, k2)
    B = k1.bundle
    G = B.G
    out = {}
    for r, s in product(G, G):
        f = G.mul(r, G.inv(s))
        acc = np.zeros(B.fiber_dim(f), complex)
        for t in G:
            a, b = G.mul(r, G.inv(t)), G.mul(t, G.inv(s))
            if B.fiber_dim(a) and B.fiber_dim(b):
                acc = acc + B.coords(f, B.mul(a, k1(r, t), b, k2(t, s)))
        out[(r, s)] = acc
    return Kernel(B, out)


def k_star(k: Kernel) -> Kernel:
    """k*(r, s) = k(s, r)^*."""
    B = k.bundle
    G = B.G
    return Kernel(B, {(r, s): B.coords(G.mul(r, G.inv(s)), B.star(G.mul(s, G.inv(r)), k(s, r)))
                      for r, s in product(G, G)})


def hs_norm(k: Kernel) -> float:
    B = k.bundle
    G = B.G
    total = 0.0
    for r, s in product(G, G):
        if B.fiber_dim(G.mul(r, G.inv(s))):
            total += B.norm(G.mul(r, G.inv(s)), k(r, s)) ** 2
    return float(np.sqrt(total))


def natural_action(t: int, k: Kernel) -> Kernel:
    """beta_t(k)(r, s) = k(rt, st)."""
    G = k.bundle.G
    return Kernel(k.bundle, {(r, s): k.entries[(G.mul(r, t), G.mul(s, t))] for r, s in product(G, G)})


def beta_matrix(B: FellBundle, t: int, layout: KernelLayout | None = None) -> np.ndarray:
    """The natural action as a permutation matrix on flattened coordinates."""
    layout = layout or KernelLayout(B)
    G = B.G
    M = np.zeros((layout.dim, layout.dim))
    for (r, s), sl in layout.slices.items():
        src = layout.slices[(G.mul(r, t), G.mul(s, t))]
        M[sl, src] = np.eye(sl.stop - sl.start)
    return M


def rank_one(xi: Section, eta: Section) -> Kernel:
    """<xi, eta>_l (r, s) = xi(r) eta(s)^*."""
    if xi.bundle is not eta.bundle:
        raise ValueError("sections of different bundles")
    B = xi.bundle
    G = B.G
    return Kernel(B, {(r, s): B.coords(G.mul(r, G.inv(s)),
                                      B.mul(r, xi(r), G.inv(s), B.star(s, eta(s))))
                      for r, s in product(G, G)})


def left_action(k: Kernel, xi: Section) -> Section:
    """(k xi)(r) = sum_s k(r, s) xi(s)."""
    B = k.bundle
    G = B.G
    vals = []
    for r in G:
        acc = np.zeros(B.fiber_dim(r), complex)
        for s in G:
            a = G.mul(r, G.inv(s))
            if B.fiber_dim(a) and B.fiber_dim(s):
                acc = acc + B.coords(r, B.mul(a, k(r, s), s, xi(s)))
        vals.append(B.from_coords(r, acc))
    return Section(B, tuple(vals))


def _product_span(B: FellBundle, r: int, s: int) -> Subspace:
    """span B_r B_s^* inside B_{rs^-1}."""
    G = B.G
    f = G.mul(r, G.inv(s))
    vecs = [B.coords(f, B.mul(r, x, G.inv(s), B.star(s, y))) for x in B.basis(r) for y in B.basis(s)]
    return Subspace.span(vecs, B.fiber_dim(f))


def ideal_I(B: FellBundle, layout: KernelLayout | None = None) -> Subspace:
    """span of the rank-one kernels: entry (r, s) ranges over span B_r B_s^*."""
    layout = layout or KernelLayout(B)
    return layout.direct_sum({(r, s): _product_span(B, r, s) for r, s in layout.slices})


def ideal_I_from_sections(B: FellBundle, rng: np.random.Generator, extra: int = 2) -> Subspace:
    """Independent route: span of rank_one(xi, eta) over random sections."""
    layout = KernelLayout(B)
    target = layout.dim
    n = int(np.ceil(np.sqrt(target))) + extra
    xs = [random_section(B, rng) for _ in range(n)]
    ys = [random_section(B, rng) for _ in range(n)]
    return Subspace.span([rank_one(x, y).coords() for x in xs for y in ys], layout.dim)


def is_ideal(B: FellBundle, I: Subspace, layout: KernelLayout | None = None) -> Report:
    """Two-sided *-ideal test on single-entry kernels, fiber by fiber."""
    layout = layout or KernelLayout(B)
    G = B.G
    # per-entry projections of I; I is a direct sum over entries iff it is rebuilt from them
    fib = {rs: Subspace.span(list(I.basis[:, sl]), sl.stop - sl.start) for rs, sl in layout.slices.items()}
    rep = Report()
    rep.add("I is a direct sum over entries", layout.direct_sum(fib).equals(I, 1e-8))
    left = right = starred = True
    for r, t, s in product(G, G, G):
        a, b, f = G.mul(r, G.inv(t)), G.mul(t, G.inv(s)), G.mul(r, G.inv(s))
        for x in B.basis(a):
            for y in fib[(t, s)].basis:
                z = B.coords(f, B.mul(a, x, b, B.from_coords(b, y)))
                left &= fib[(r, s)].contains(z, 1e-8)
        for y in fib[(r, t)].basis:
            for x in B.basis(b):
                z = B.coords(f, B.mul(a, B.from_coords(a, y), b, x))
                right &= fib[(r, s)].contains(z, 1e-8)
    for r, s in product(G, G):
        f, fi = G.mul(r, G.inv(s)), G.mul(s, G.inv(r))
        for y in fib[(r, s)].basis:
            starred &= fib[(s, r)].contains(B.coords(fi, B.star(f, B.from_coords(f, y))), 1e-8)
    rep.add("k I <= I", left)
    rep.add("I k <= I", right)
    rep.add("I* = I", starred)
    return rep


def orbit_span(B: FellBundle, I: Subspace | None = None) -> Subspace:
    layout = KernelLayout(B)
    I = ideal_I(B, layout) if I is None else I
    if I.dim == 0:
        return I
    return Subspace.span([(beta_matrix(B, t, layout) @ v) for t in B.G for v in I.basis], layout.dim)


def restricted_ideal(B: FellBundle, t: int) -> Subspace:
    """I_t = I & beta_t(I), from block supports and cross-checked as a meet."""
    root = _root(B)
    if not isinstance(B, SemidirectBundle):
        raise TypeError("restricted_ideal needs a semidirect bundle")
    G, alpha, A = B.G, B.alpha, B.A
    layout = KernelLayout(B)
    parts = {}
    for r, s in layout.slices:
        f = G.mul(r, G.inv(s))
        labels = alpha.domains[r] & alpha.domains[G.mul(r, t)] & alpha.domains[f]
        fib_labels = [b for b in A.labels if b in alpha.domains[f]]
        vecs = [A.coords(m, fib_labels) for m in A.basis(labels)]
        parts[(r, s)] = Subspace.span(vecs, B.fiber_dim(f))
    by_support = layout.direct_sum(parts)
    I = ideal_I(B, layout)
    moved = Subspace.span([beta_matrix(B, t, layout) @ v for v in I.basis], layout.dim) if I.dim else I
    by_meet = I.meet(moved)
    if not by_support.equals(by_meet, 1e-8):
        raise AssertionError(f"support and meet disagree: {by_support.dim} vs {by_meet.dim}")
    return by_support


def pi_c(k: Kernel) -> np.ndarray:
    """Block (r, s) is pi(k(r, s)) on l2(G) (x) H."""
    B = k.bundle
    G = B.G
    n = B.carrier_dim
    out = np.zeros((G.order * n, G.order * n), complex)
    for r, s in product(G, G):
        f = G.mul(r, G.inv(s))
        if B.fiber_dim(f):
            out[r * n:(r + 1) * n, s * n:(s + 1) * n] = B.pi(f, k(r, s))
    return out


def kernel_basis(B: FellBundle, layout: KernelLayout | None = None) -> list[Kernel]:
    layout = layout or KernelLayout(B)
    eye = np.eye(layout.dim)
    return [kernel_from_coords(B, eye[i], layout) for i in range(layout.dim)]


@dataclass(eq=False)
class KernelAlgebra:
    bundle: FellBundle
    layout: KernelLayout
    images: list[np.ndarray]        # pi_c of the coordinate basis
    algebra: MatrixStarAlgebra
    report: Report

    @property
    def dim(self) -> int:
        return self.layout.dim

    @cached_property
    def blocks(self) -> list[int]:
        return wedderburn(self.algebra).sorted_blocks

    def beta(self, t: int, k: Kernel) -> Kernel:
        return natural_action(t, k)


def kernel_algebra(B: FellBundle, tol: float | None = None, rng: np.random.Generator | None = None) -> KernelAlgebra:
    tol = default_tol() if tol is None else tol
    rng = rng or np.random.default_rng(17)
    G = B.G
    layout = KernelLayout(B)
    images = [pi_c(k) for k in kernel_basis(B, layout)]
    rep = Report()
    rep.add("dim = |G| sum_t dim B_t", layout.dim == G.order * B.total_dim(),
            detail={"dim": layout.dim, "formula": G.order * B.total_dim()})
    if not images:
        n = G.order * B.carrier_dim
        return KernelAlgebra(B, layout, [], MatrixStarAlgebra(n, Subspace.zero(n * n), tol), rep)
    r = rank(np.array([m.ravel() for m in images]), tol)
    rep.add("pi_c faithful", r == layout.dim, detail={"rank": r})
    alg = star_algebra_closure(images, tol)
    rep.add("pi_c image closed under products", alg.dim == r, detail={"closure": alg.dim})
    _, rho = regular_reps(G)
    n = B.carrier_dim
    hom = cov = 0.0
    for _ in range(3):
        k1, k2 = random_kernel(B, rng), random_kernel(B, rng)
        hom = max(hom, float(np.abs(pi_c(k_mul(k1, k2)) - pi_c(k1) @ pi_c(k2)).max()))
        hom = max(hom, float(np.abs(pi_c(k_star(k1)) - adjoint(pi_c(k1))).max()))
        for t in G:
            R = np.kron(rho[t], np.eye(n))
            cov = max(cov, float(np.abs(pi_c(natural_action(t, k1)) - R @ pi_c(k1) @ adjoint(R)).max()))
    rep.add("pi_c *-homomorphism", hom <= 1e-8, residual=hom)
    rep.add("pi_c(beta_t k) = rho_t pi_c(k) rho_t*", cov <= 1e-8, residual=cov)
    return KernelAlgebra(B, layout, images, alg, rep)


def verify_env_of_ideal(B: FellBundle) -> Report:
    """I is a beta-compatible ideal whose orbit spans k(B)."""
    layout = KernelLayout(B)
    I = ideal_I(B, layout)
    rep = Report()
    rep.extend(is_ideal(B, I, layout))
    for t in B.G:
        # beta_t(I & beta_t^-1(I)) = I & beta_t(I) as subspaces
        bt, bti = beta_matrix(B, t, layout), beta_matrix(B, B.G.inv(t), layout)
        I_t = I.meet(_image(bt, I))
        I_ti = I.meet(_image(bti, I))
        rep.add(f"beta_{B.G.label(t)} maps I_t^-1 onto I_t", _image(bt, I_ti).equals(I_t, 1e-8))
    span = orbit_span(B, I)
    rep.add("span of the beta-orbit of I = k(B)", span.dim == layout.dim,
            detail={"orbit_span_dim": span.dim, "dim": layout.dim})
    return rep


def _image(M: np.ndarray, S: Subspace) -> Subspace:
    if S.dim == 0:
        return S
    return Subspace.span([M @ v for v in S.basis], S.n)


def is_saturated_kernels(B: FellBundle) -> bool:
    return ideal_I(B).dim == KernelLayout(B).dim


def multiplier_embed(f: Section, k: Kernel) -> Kernel:
    """h(r, t) = sum_s f(s) k(s^-1 r, t)."""
    if f.bundle is not k.bundle:
        raise ValueError("section and kernel over different bundles")
    B = k.bundle
    G = B.G
    out = {}
    for r, t in product(G, G):
        fib = G.mul(r, G.inv(t))
        acc = np.zeros(B.fiber_dim(fib), complex)
        for s in G:
            u = G.mul(G.inv(s), r)
            a = G.mul(u, G.inv(t))
            if B.fiber_dim(s) and B.fiber_dim(a):
                acc = acc + B.coords(fib, B.mul(s, f(s), a, k(u, t)))
        out[(r, t)] = acc
    return Kernel(B, out)


def multiplier_defect(f: Section, k: Kernel) -> float:
    """|| pi_c(f . k) - pi_lambda(f) pi_c(k) ||, entrywise max."""
    return float(np.abs(pi_c(multiplier_embed(f, k)) - pi_lambda(f) @ pi_c(k)).max())


# ---------------------------------------------------------------- functoriality


@dataclass(eq=False)
class BundleMorphism:
    src: FellBundle
    dst: FellBundle
    maps: list[np.ndarray]      # per t: coordinate matrix (dim dst_t) x (dim src_t)

    def apply(self, t: int, x):
        return self.dst.from_coords(t, self.maps[t] @ self.src.coords(t, x))


def validate_morphism(phi: BundleMorphism, tol: float = 1e-8) -> Report:
    A, B, G = phi.src, phi.dst, phi.src.G
    rep = Report()
    mult = star = 0.0
    for r, s in product(G, G):
        rs = G.mul(r, s)
        for x in A.basis(r):
            for y in A.basis(s):
                lhs = B.coords(rs, phi.apply(rs, A.mul(r, x, s, y)))
                rhs = B.coords(rs, B.mul(r, phi.apply(r, x), s, phi.apply(s, y)))
                mult = max(mult, float(np.abs(lhs - rhs).max(initial=0.0)))
    for t in G:
        ti = G.inv(t)
        for x in A.basis(t):
            d = B.coords(ti, phi.apply(ti, A.star(t, x))) - B.coords(ti, B.star(t, phi.apply(t, x)))
            star = max(star, float(np.abs(d).max(initial=0.0)))
    rep.add("multiplicative", mult <= tol, residual=mult)
    rep.add("*-preserving", star <= tol, residual=star)
    return rep


def identity_morphism(B: FellBundle) -> BundleMorphism:
    return BundleMorphism(B, B, [np.eye(B.fiber_dim(t)) for t in B.G])


def inclusion_morphism(A: SubBundle) -> BundleMorphism:
    return BundleMorphism(A, A.parent, [A.fibers[t].basis.T for t in A.G])


def envelope_morphism(alpha: PartialActionAlg, w: EnvelopeWitness) -> BundleMorphism:
    """semidirect(alpha) -> semidirect(beta), x delta_t -> embed(x) delta_t."""
    src = SemidirectBundle(alpha)
    dst = SemidirectBundle(w.beta)
    maps = []
    for t in alpha.G:
        cols = [dst.coords(t, w.embed.apply(x)) for x in src.basis(t)]
        maps.append(np.array(cols).T if cols else np.zeros((dst.fiber_dim(t), 0)))
    return BundleMorphism(src, dst, maps)


@dataclass(eq=False)
class KernelMap:
    morphism: BundleMorphism
    matrix: np.ndarray          # flattened k(A) coordinates -> flattened k(B) coordinates
    report: Report

    def apply(self, k: Kernel) -> Kernel:
        return kernel_from_coords(self.morphism.dst, self.matrix @ k.coords())

    @property
    def injective(self) -> bool:
        return rank(self.matrix) == self.matrix.shape[1] if self.matrix.size else True


def kernel_functor(phi: BundleMorphism, rng: np.random.Generator | None = None) -> KernelMap:
    rng = rng or np.random.default_rng(23)
    check = validate_morphism(phi)
    if not check.ok:
        raise ValueError(f"not a bundle morphism: {[c.name for c in check.failures]}")
    A, B = phi.src, phi.dst
    la, lb = KernelLayout(A), KernelLayout(B)
    M = np.zeros((lb.dim, la.dim), complex)
    for rs, sl in la.slices.items():
        M[lb.slices[rs], sl] = phi.maps[la.fiber[rs]]
    km = KernelMap(phi, M, Report())
    km.report.extend(check)
    hom = 0.0
    for _ in range(3):
        k1, k2 = random_kernel(A, rng), random_kernel(A, rng)
        hom = max(hom, float(np.abs(km.apply(k_mul(k1, k2)).coords() - k_mul(km.apply(k1), km.apply(k2)).coords()).max(initial=0)))
        hom = max(hom, float(np.abs(km.apply(k_star(k1)).coords() - k_star(km.apply(k1)).coords()).max(initial=0)))
    km.report.add("kernel map is a *-homomorphism", hom <= 1e-8, residual=hom)
    phi_inj = all(rank(m) == m.shape[1] for m in phi.maps if m.size)
    if phi_inj:
        km.report.add("injective", km.injective)
    return km
