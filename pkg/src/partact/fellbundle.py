"""Fell bundles over finite groups.

Every bundle exposes the same small interface: per-fiber bases and
coordinates, the graded product ``mul(r, x, s, y)`` landing in B_{rs}, the
involution ``star(t, x)`` landing in B_{t^-1}, a C*-norm, and a faithful
representation ``pi(t, x)`` on a finite carrier.

Flavors:

- ``SemidirectBundle``: fibers {t} x D_t of a partial action, elements stored
  as elements of A, product and involution from the partial action.
- ``RepresentedBundle``: fibers are concrete operator subspaces of a common
  carrier, product and involution are matrix product and adjoint.
- ``TableBundle``: structure constants only (used to exercise validation).
- ``SubBundle``: fiberwise subspaces of a parent bundle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .core import FiniteGroup, Report, Subspace, adjoint, default_tol, rank, spectral_norm
from .fdalg import FdCStar
from .paction import EnvelopeWitness, PartialActionAlg, validate_alg


class FellBundle:
    """Common interface; subclasses fill in the primitives."""

    G: FiniteGroup

    def fiber_dim(self, t: int) -> int:
        raise NotImplementedError

    def basis(self, t: int) -> list:
        raise NotImplementedError

    def coords(self, t: int, x) -> np.ndarray:
        raise NotImplementedError

    def from_coords(self, t: int, v: np.ndarray):
        raise NotImplementedError

    def mul(self, r: int, x, s: int, y):
        raise NotImplementedError

    def star(self, t: int, x):
        raise NotImplementedError

    def norm(self, t: int, x) -> float:
        return spectral_norm(self.pi(t, x))

    def is_positive(self, x) -> bool:
        p = self.pi(self.G.e, x)
        w = np.linalg.eigvalsh((p + adjoint(p)) / 2)
        return bool(w.min() >= -1e-9 * max(1.0, abs(w).max())) and np.allclose(p, adjoint(p), atol=1e-9)

    def pi(self, t: int, x) -> np.ndarray:
        raise NotImplementedError

    @property
    def carrier_dim(self) -> int:
        raise NotImplementedError

    # derived helpers
    def zero(self, t: int):
        return self.from_coords(t, np.zeros(self.fiber_dim(t), dtype=complex))

    def add(self, t: int, x, y):
        return self.from_coords(t, self.coords(t, x) + self.coords(t, y))

    def scale(self, t: int, c: complex, x):
        return self.from_coords(t, c * self.coords(t, x))

    def total_dim(self) -> int:
        return sum(self.fiber_dim(t) for t in self.G)

    def fiber_dims(self) -> list[int]:
        return [self.fiber_dim(t) for t in self.G]

    def random(self, t: int, rng: np.random.Generator):
        d = self.fiber_dim(t)
        return self.from_coords(t, rng.standard_normal(d) + 1j * rng.standard_normal(d))

    def span_dim(self, t: int, elements: Sequence) -> int:
        if not elements:
            return 0
        return rank(np.array([self.coords(t, x) for x in elements]))


# ---------------------------------------------------------------- semidirect


class SemidirectBundle(FellBundle):
    """B_t = {t} x D_t with (x d_t)(y d_s) = alpha_t(alpha_t^-1(x) y) d_ts and
    (x d_t)^* = alpha_t^-1(x^*) d_t^-1."""

    def __init__(self, alpha: PartialActionAlg, check: bool = True):
        if check and not validate_alg(alpha):
            raise ValueError("semidirect bundle needs a valid partial action")
        self.alpha = alpha
        self.G = alpha.G
        self.A = alpha.A
        self._labels = [[b for b in self.A.labels if b in alpha.domains[t]] for t in self.G]
        self._verified = False

    def fiber_dim(self, t):
        return sum(self.A.size(b) ** 2 for b in self._labels[t])

    def basis(self, t):
        return self.A.basis(self._labels[t])

    def coords(self, t, x):
        return self.A.coords(x, self._labels[t])

    def from_coords(self, t, v):
        return self.A.from_coords(v, self._labels[t])

    def mul(self, r, x, s, y):
        a = self.alpha
        return a.alpha(r, a.alpha(self.G.inv(r), x) @ y)

    def star(self, t, x):
        return self.alpha.alpha(self.G.inv(t), adjoint(x))

    def norm(self, t, x):
        return spectral_norm(x)

    def is_positive(self, x):
        w = np.linalg.eigvalsh((x + adjoint(x)) / 2)
        return bool(np.allclose(x, adjoint(x), atol=1e-9) and w.min() >= -1e-9 * max(1.0, abs(w).max()))

    @cached_property
    def represented(self) -> "RepresentedBundle":
        return represent(self)

    def pi(self, t, x):
        if not self._verified:
            self._verified = True
            self.__dict__["represented"] = represent(self)
        return np.tensordot(self.coords(t, x), self._pi_basis[t], axes=1)

    @cached_property
    def _pi_basis(self):
        """pi of each fiber basis vector; pi is linear, so pi(x) is a combination."""
        n = self.carrier_dim
        return [np.array([self._pi_raw(t, b) for b in self.basis(t)]).reshape(-1, n, n) for t in self.G]

    @property
    def carrier_dim(self):
        return self._carrier[1].shape[1]

    @cached_property
    def _carrier(self):
        """Index layout of K = (+)_u p_{u^-1} H_A inside (+)_u H_A."""
        A, G = self.A, self.G
        h = A.hdim
        cols = []
        for u in G:
            keep = self._labels[G.inv(u)]
            for b in keep:
                o = A.offset(b)
                cols.extend(u * h + o + i for i in range(A.size(b)))
        V = np.zeros((G.order * h, len(cols)))
        for j, c in enumerate(cols):
            V[c, j] = 1.0
        return h, V

    def _pi_raw(self, s, x):
        """Component u goes to component su by left multiplication with
        alpha_{u^-1}(alpha_{s^-1}(x) p_u)."""
        A, G, a = self.A, self.G, self.alpha
        h, V = self._carrier
        big = np.zeros((G.order * h, G.order * h), dtype=complex)
        xs = a.alpha(G.inv(s), x)
        for u in G:
            t = G.mul(s, u)
            m = a.alpha(G.inv(u), xs @ A.unit(self._labels[u]))
            big[t * h:(t + 1) * h, u * h:(u + 1) * h] = m
        return V.T @ big @ V


# ---------------------------------------------------------------- represented


class RepresentedBundle(FellBundle):
    """Fibers are subspaces of M_n(C); product is matrix product."""

    def __init__(self, G: FiniteGroup, n: int, fibers: Sequence[Subspace]):
        self.G = G
        self.n = n
        self.fibers = tuple(fibers)

    @classmethod
    def from_spans(cls, G: FiniteGroup, n: int, spans: Sequence[Sequence[np.ndarray]]) -> "RepresentedBundle":
        return cls(G, n, [Subspace.span([np.ravel(m) for m in s], n * n) for s in spans])

    def fiber_dim(self, t):
        return self.fibers[t].dim

    def basis(self, t):
        return list(self.fibers[t].basis.reshape(-1, self.n, self.n))

    def coords(self, t, x):
        return self.fibers[t].coords(np.ravel(x))

    def from_coords(self, t, v):
        return (self.fibers[t].basis.T @ np.asarray(v)).reshape(self.n, self.n)

    def mul(self, r, x, s, y):
        return x @ y

    def star(self, t, x):
        return adjoint(x)

    def pi(self, t, x):
        return x

    @property
    def carrier_dim(self):
        return self.n

    def to_json(self) -> dict:
        from .fdalg import _matrix_to_json

        return {
            "kind": "bundle",
            "group": self.G.to_json(),
            "carrier": self.n,
            "fibers": {self.G.label(t): [_matrix_to_json(m) for m in self.basis(t)] for t in self.G},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "RepresentedBundle":
        from .fdalg import _matrix_from_json

        G = FiniteGroup.from_json(data["group"])
        n = int(data["carrier"])
        spans = [[_matrix_from_json(m) for m in data["fibers"].get(G.label(t), [])] for t in G]
        return cls.from_spans(G, n, spans)


@dataclass(eq=False)
class RepresentationCheck:
    report: Report
    bundle: RepresentedBundle


def represent(B: SemidirectBundle, tol: float | None = None) -> RepresentedBundle:
    """Concrete version of a semidirect bundle on K = (+)_t p_{t^-1} H_A.

    The formula is checked at construction: multiplicative and *-preserving on
    basis pairs and injective on every fiber.
    """
    tol = default_tol() if tol is None else tol
    G = B.G
    rep = Report()
    images = {t: [B.pi(t, x) for x in B.basis(t)] for t in G}
    mul = star = 0.0
    for r, s in product(G, G):
        for x, px in zip(B.basis(r), images[r]):
            for y, py in zip(B.basis(s), images[s]):
                mul = max(mul, float(np.abs(B.pi(G.mul(r, s), B.mul(r, x, s, y)) - px @ py).max()))
    for t in G:
        for x, px in zip(B.basis(t), images[t]):
            star = max(star, float(np.abs(B.pi(G.inv(t), B.star(t, x)) - adjoint(px)).max()))
    rep.add("pi multiplicative", mul <= 1e-9, residual=mul)
    rep.add("pi *-preserving", star <= 1e-9, residual=star)
    n = B.carrier_dim
    for t in G:
        r = rank(np.array([m.ravel() for m in images[t]]), tol) if images[t] else 0
        rep.add(f"pi injective on B_{G.label(t)}", r == B.fiber_dim(t), detail={"rank": r})
    if not rep.ok:
        raise AssertionError(f"representation check failed: {[c.name for c in rep.failures]}")
    out = RepresentedBundle.from_spans(G, n, [images[t] for t in G])
    out.verification = rep
    return out


# ---------------------------------------------------------------- structure constants


class TableBundle(FellBundle):
    """A bundle given only by structure constants on fiber bases.

    ``mult[(r, s)]`` has shape (d_r, d_s, d_rs); ``star_mats[t]`` maps
    coordinates of B_t (conjugated) to coordinates of B_t^-1. There is no
    faithful representation, so norm checks are skipped in validation.
    """

    def __init__(self, G: FiniteGroup, dims: Sequence[int], mult: Mapping, star_mats: Sequence[np.ndarray]):
        self.G = G
        self.dims = list(dims)
        self.mult = dict(mult)
        self.star_mats = list(star_mats)

    def fiber_dim(self, t):
        return self.dims[t]

    def basis(self, t):
        return list(np.eye(self.dims[t], dtype=complex))

    def coords(self, t, x):
        return np.asarray(x, dtype=complex)

    def from_coords(self, t, v):
        return np.asarray(v, dtype=complex)

    def mul(self, r, x, s, y):
        return np.einsum("i,j,ijk->k", x, y, self.mult[(r, s)])

    def star(self, t, x):
        return self.star_mats[t] @ np.conj(x)

    def pi(self, t, x):
        raise NotImplementedError("table bundles carry no representation")


def table_from_bundle(B: FellBundle) -> TableBundle:
    G = B.G
    mult = {}
    for r, s in product(G, G):
        rs = G.mul(r, s)
        T = np.zeros((B.fiber_dim(r), B.fiber_dim(s), B.fiber_dim(rs)), dtype=complex)
        for i, x in enumerate(B.basis(r)):
            for j, y in enumerate(B.basis(s)):
                T[i, j] = B.coords(rs, B.mul(r, x, s, y))
        mult[(r, s)] = T
    stars = []
    for t in G:
        # star is conjugate linear: star(sum c_i b_i) = sum conj(c_i) star(b_i)
        cols = [B.coords(G.inv(t), B.star(t, x)) for x in B.basis(t)]
        stars.append(np.array(cols).T if cols else np.zeros((B.fiber_dim(G.inv(t)), 0)))
    return TableBundle(G, [B.fiber_dim(t) for t in G], mult, stars)


# ---------------------------------------------------------------- sub-bundles


class SubBundle(FellBundle):
    """Fiberwise subspaces E_t of a parent bundle, in parent coordinates."""

    def __init__(self, parent: FellBundle, fibers: Sequence[Subspace], kind: str = "subspace"):
        self.parent = parent
        self.G = parent.G
        self.fibers = tuple(fibers)
        self.kind = kind

    @classmethod
    def from_elements(cls, parent: FellBundle, elements: Sequence[Sequence], kind: str = "subspace") -> "SubBundle":
        G = parent.G
        return cls(parent, [Subspace.span([parent.coords(t, x) for x in elements[t]], parent.fiber_dim(t))
                            for t in G], kind)

    @classmethod
    def whole(cls, parent: FellBundle) -> "SubBundle":
        return cls(parent, [Subspace.full(parent.fiber_dim(t)) for t in parent.G], "whole")

    @classmethod
    def trivial(cls, parent: FellBundle) -> "SubBundle":
        return cls(parent, [Subspace.zero(parent.fiber_dim(t)) for t in parent.G], "zero")

    def fiber_dim(self, t):
        return self.fibers[t].dim

    def basis(self, t):
        return [self.parent.from_coords(t, v) for v in self.fibers[t].basis]

    def coords(self, t, x):
        return self.fibers[t].coords(self.parent.coords(t, x))

    def from_coords(self, t, v):
        return self.parent.from_coords(t, self.fibers[t].basis.T @ np.asarray(v))

    def contains(self, t, x, tol: float | None = None) -> bool:
        return self.fibers[t].contains(self.parent.coords(t, x), tol)

    def mul(self, r, x, s, y):
        return self.parent.mul(r, x, s, y)

    def star(self, t, x):
        return self.parent.star(t, x)

    def norm(self, t, x):
        return self.parent.norm(t, x)

    def is_positive(self, x):
        return self.parent.is_positive(x)

    def pi(self, t, x):
        return self.parent.pi(t, x)

    @property
    def carrier_dim(self):
        return self.parent.carrier_dim

    def le(self, other: "SubBundle") -> bool:
        return all(self.fibers[t].le(other.fibers[t]) for t in self.G)


# ---------------------------------------------------------------- operations


def semidirect_bundle(alpha: PartialActionAlg) -> SemidirectBundle:
    return SemidirectBundle(alpha)


def validate_bundle(B: FellBundle, tol: float = 1e-9, rng: np.random.Generator | None = None) -> Report:
    """Fell bundle axioms checked on basis elements (norm checks on random ones)."""
    G = B.G
    rep = Report()
    rng = rng or np.random.default_rng(0)
    assoc = invol = anti = 0.0
    for r, s, t in product(G, G, G):
        rs, st, rst = G.mul(r, s), G.mul(s, t), G.mul(G.mul(r, s), t)
        for x in B.basis(r):
            for y in B.basis(s):
                xy = B.mul(r, x, s, y)
                for z in B.basis(t):
                    d = B.coords(rst, B.mul(rs, xy, t, z)) - B.coords(rst, B.mul(r, x, st, B.mul(s, y, t, z)))
                    assoc = max(assoc, float(np.abs(d).max(initial=0.0)))
    for r, s in product(G, G):
        rs = G.mul(r, s)
        for x in B.basis(r):
            for y in B.basis(s):
                lhs = B.star(rs, B.mul(r, x, s, y))
                rhs = B.mul(G.inv(s), B.star(s, y), G.inv(r), B.star(r, x))
                anti = max(anti, float(np.abs(B.coords(G.inv(rs), lhs) - B.coords(G.inv(rs), rhs)).max(initial=0.0)))
    for t in G:
        for x in B.basis(t):
            back = B.star(G.inv(t), B.star(t, x))
            invol = max(invol, float(np.abs(B.coords(t, back) - B.coords(t, x)).max(initial=0.0)))
    rep.add("associative", assoc <= tol, residual=assoc)
    rep.add("(xy)* = y* x*", anti <= tol, residual=anti)
    rep.add("x** = x", invol <= tol, residual=invol)
    if isinstance(B, TableBundle):
        rep.add("norm axioms", True, detail="no representation supplied; C*-identity not checked")
        return rep
    cstar = 0.0
    positive = True
    for t in G:
        for _ in range(3):
            x = B.random(t, rng)
            if B.fiber_dim(t) == 0:
                continue
            xx = B.mul(G.inv(t), B.star(t, x), t, x)
            nx = B.norm(t, x)
            cstar = max(cstar, abs(B.norm(G.e, xx) - nx * nx) / max(1.0, nx * nx))
            positive &= B.is_positive(xx)
    rep.add("||x*x|| = ||x||^2", cstar <= 1e-8, residual=cstar)
    rep.add("x*x >= 0 in B_e", positive)
    return rep


def product_span_dim(B: FellBundle, r: int, s: int) -> int:
    rs = B.G.mul(r, s)
    return B.span_dim(rs, [B.mul(r, x, s, y) for x in B.basis(r) for y in B.basis(s)])


def is_saturated(B: FellBundle) -> bool:
    G = B.G
    return all(product_span_dim(B, r, s) == B.fiber_dim(G.mul(r, s)) for r in G for s in G)


def _sub_products(B: FellBundle, X: SubBundle, Y: SubBundle, star_right: bool = False, star_left: bool = False):
    """Yield (fiber, element) for products x y (optionally with adjoints)."""
    G = B.G
    for r in G:
        for s in G:
            for x in X.basis(r):
                xr = G.inv(r) if star_left else r
                xx = B.star(r, x) if star_left else x
                for y in Y.basis(s):
                    ys = G.inv(s) if star_right else s
                    yy = B.star(s, y) if star_right else y
                    yield G.mul(xr, ys), B.mul(xr, xx, ys, yy)


@dataclass(eq=False)
class Triple:
    A: SubBundle
    E: SubBundle
    B: FellBundle
    report: Report
    full: bool


def make_triple(A: SubBundle, E: SubBundle, B: FellBundle, tol: float | None = None) -> Triple:
    """Check A E <= E, E B <= E, E E* <= A and record fullness of E*E in B."""
    tol = default_tol() if tol is None else tol
    G = B.G
    rep = Report()
    if not A.le(E):
        raise ValueError("A is not contained in E")
    whole = SubBundle.whole(B)
    rep.add("A closed under product", all(A.contains(t, z, tol) for t, z in _sub_products(B, A, A)))
    rep.add("A closed under star", all(A.contains(G.inv(t), B.star(t, x), tol) for t in G for x in A.basis(t)))
    rep.add("A E <= E", all(E.contains(t, z, tol) for t, z in _sub_products(B, A, E)))
    rep.add("E B <= E", all(E.contains(t, z, tol) for t, z in _sub_products(B, E, whole)))
    rep.add("E E* <= A", all(A.contains(t, z, tol) for t, z in _sub_products(B, E, E, star_right=True)))
    gen: dict[int, list] = {t: [] for t in G}
    for t, z in _sub_products(B, E, E, star_left=True):
        gen[t].append(z)
    full = all(B.span_dim(t, gen[t]) == B.fiber_dim(t) for t in G)
    rep.add("containments", rep.ok)
    return Triple(A, E, B, rep, full)


def envelope_bundles(alpha: PartialActionAlg, w: EnvelopeWitness) -> tuple[SubBundle, SubBundle, SemidirectBundle]:
    """The semidirect bundle of the envelope with the images of B_alpha and
    of the ideal triple E_t = {(t, x) : x in A}."""
    Bb = SemidirectBundle(w.beta)
    G = alpha.G
    Asub = SubBundle.from_elements(Bb, [[w.embed.apply(x) for x in alpha.A.basis(alpha.domains[t])] for t in G],
                                   "sub-Fell-bundle")
    Esub = SubBundle.from_elements(Bb, [[w.embed.apply(x) for x in alpha.A.basis()] for _ in G], "right-ideal")
    return Asub, Esub, Bb
