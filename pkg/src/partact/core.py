"""Finite groups and the complex-matrix substrate.

Every algebra in the package is a concrete span of complex matrices. Rank
decisions are relative (sigma_k / sigma_1 > tol) so they do not depend on
the scale of the input.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Iterable, Sequence

import numpy as np

RANK_TOL = 1e-9
ISO_TOL = 1e-8


def default_tol() -> float:
    """Rank tolerance, overridable through the PARTACT_TOL environment variable."""
    raw = os.environ.get("PARTACT_TOL")
    return float(raw) if raw else RANK_TOL


# ---------------------------------------------------------------- reports


@dataclass
class Check:
    name: str
    ok: bool
    residual: float | None = None
    detail: Any = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "ok": bool(self.ok)}
        if self.residual is not None:
            out["residual"] = float(self.residual)
        if self.detail is not None:
            out["detail"] = self.detail
        return out


@dataclass
class Report:
    """A list of named checks. Truthy iff every check passed."""

    checks: list[Check] = field(default_factory=list)

    def add(self, name: str, ok: bool, residual: float | None = None, detail: Any = None) -> bool:
        self.checks.append(Check(name, bool(ok), residual, detail))
        return bool(ok)

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.ok, c.residual, c.detail))

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def __bool__(self) -> bool:
        return self.ok

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def max_residual(self) -> float:
        vals = [c.residual for c in self.checks if c.residual is not None]
        return max(vals, default=0.0)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [c.to_dict() for c in self.checks]}


# ---------------------------------------------------------------- groups


@dataclass(frozen=True)
class FiniteGroup:
    """A finite group given by its multiplication table on indices 0..n-1."""

    elements: tuple[str, ...]
    table: tuple[tuple[int, ...], ...]
    identity: int = 0
    inverses: tuple[int, ...] = ()

    def __post_init__(self):
        n = len(self.elements)
        if n == 0:
            raise ValueError("a group needs at least one element")
        if len(self.table) != n or any(len(row) != n for row in self.table):
            raise ValueError("multiplication table must be n x n")
        e = self.identity
        if any(self.table[e][i] != i or self.table[i][e] != i for i in range(n)):
            raise ValueError("identity is not two-sided")
        for a, b, c in product(range(n), repeat=3):
            if self.table[self.table[a][b]][c] != self.table[a][self.table[b][c]]:
                raise ValueError(f"table not associative at {(a, b, c)}")
        inv = []
        for a in range(n):
            cands = [b for b in range(n) if self.table[a][b] == e]
            if len(cands) != 1 or self.table[cands[0]][a] != e:
                raise ValueError(f"element {self.elements[a]} has no inverse")
            inv.append(cands[0])
        object.__setattr__(self, "inverses", tuple(inv))

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(range(len(self.elements)))

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inv(self, a: int) -> int:
        return self.inverses[a]

    def index(self, label: str) -> int:
        return self.elements.index(label)

    def label(self, a: int) -> str:
        return self.elements[a]

    @property
    def e(self) -> int:
        return self.identity

    def is_abelian(self) -> bool:
        return all(self.table[a][b] == self.table[b][a] for a in self for b in self)

    def subgroups(self) -> list[frozenset[int]]:
        """All subgroups (brute force; the groups here have order <= 6 or so)."""
        n = self.order
        found = set()
        for mask in range(1 << n):
            s = frozenset(i for i in range(n) if mask >> i & 1)
            if self.identity in s and all(self.mul(a, b) in s for a in s for b in s):
                found.add(s)
        return sorted(found, key=lambda s: (len(s), sorted(s)))

    def to_json(self) -> dict:
        return {
            "elements": list(self.elements),
            "mul": [[self.elements[c] for c in row] for row in self.table],
        }

    @classmethod
    def from_json(cls, data: dict) -> "FiniteGroup":
        if "cyclic" in data:
            return make_cyclic(int(data["cyclic"]))
        elements = tuple(str(x) for x in data["elements"])
        pos = {x: i for i, x in enumerate(elements)}
        rows = tuple(tuple(c if isinstance(c, int) else pos[str(c)] for c in row) for row in data["mul"])
        ident = [i for i in range(len(elements)) if rows[i] == tuple(range(len(elements)))]
        if not ident:
            raise ValueError("table has no identity row")
        return cls(elements, rows, ident[0])


def make_cyclic(n: int) -> FiniteGroup:
    """Z_n with identity ``e`` and generator ``g``."""
    if n < 1:
        raise ValueError("cyclic group order must be >= 1")
    labels = tuple("e" if k == 0 else ("g" if k == 1 else f"g{k}") for k in range(n))
    table = tuple(tuple((a + b) % n for b in range(n)) for a in range(n))
    return FiniteGroup(labels, table, 0)


def direct_product(g1: FiniteGroup, g2: FiniteGroup) -> FiniteGroup:
    pairs = [(a, b) for a in g1 for b in g2]
    pos = {p: i for i, p in enumerate(pairs)}

    def name(a, b):
        x, y = g1.label(a), g2.label(b)
        if x == "e":
            return "e" if y == "e" else y + "'"
        return x if y == "e" else f"{x}{y}'"

    labels = tuple(name(a, b) for a, b in pairs)
    table = tuple(
        tuple(pos[(g1.mul(a, c), g2.mul(b, d))] for (c, d) in pairs) for (a, b) in pairs
    )
    return FiniteGroup(labels, table, pos[(g1.e, g2.e)])


def make_klein() -> FiniteGroup:
    return direct_product(make_cyclic(2), make_cyclic(2))


def make_symmetric3() -> FiniteGroup:
    from itertools import permutations

    perms = list(permutations(range(3)))
    pos = {p: i for i, p in enumerate(perms)}
    table = tuple(
        tuple(pos[tuple(p[q[i]] for i in range(3))] for q in perms) for p in perms
    )
    labels = tuple("e" if p == (0, 1, 2) else "s" + "".join(map(str, p)) for p in perms)
    return FiniteGroup(labels, table, pos[(0, 1, 2)])


def small_groups(max_order: int = 4) -> list[FiniteGroup]:
    """The groups of order <= max_order used by the randomized suites."""
    out = [make_cyclic(n) for n in range(1, max_order + 1)]
    if max_order >= 4:
        out.append(make_klein())
    if max_order >= 6:
        out.append(make_symmetric3())
    return out


def regular_reps(G: FiniteGroup) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Left and right regular representations as permutation matrices.

    lam[t] e_s = e_{ts};  (rho[t] x)(r) = x(rt).
    """
    n = G.order
    lam, rho = [], []
    for t in G:
        L = np.zeros((n, n))
        R = np.zeros((n, n))
        for s in G:
            L[G.mul(t, s), s] = 1.0
            R[s, G.mul(s, t)] = 1.0
        lam.append(L)
        rho.append(R)
    return lam, rho


# ---------------------------------------------------------------- matrices


def adjoint(M: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(M, -1, -2))


def spectral_norm(M: np.ndarray) -> float:
    """Largest singular value, from the Hermitian eigendecomposition of M*M."""
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0.0
    w = np.linalg.eigvalsh(adjoint(M) @ M)
    return float(np.sqrt(max(w[-1], 0.0)))


def singular_values(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M)
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def rank(M: np.ndarray, tol: float | None = None) -> int:
    tol = default_tol() if tol is None else tol
    s = singular_values(M)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s / s[0] > tol))


def rand_complex(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    q, r = np.linalg.qr(rand_complex(rng, n, n))
    d = np.diag(r)
    return q * (d / np.abs(d))


def unit_matrix(n: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=complex)
    m[i, j] = 1.0
    return m


# ---------------------------------------------------------------- subspaces


_SPAN_CHUNK = 128


def pair_products(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """out[a, b] = A[a] @ B[b] for stacks of matrices."""
    return np.tensordot(A, B, axes=([2], [1])).transpose(0, 2, 1, 3)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of C^n held as an orthonormal row basis."""

    basis: np.ndarray  # shape (k, n)
    n: int

    @classmethod
    def span(cls, vectors: Iterable[np.ndarray] | np.ndarray, n: int, tol: float | None = None) -> "Subspace":
        tol = default_tol() if tol is None else tol
        rows = [np.ravel(v) for v in vectors] if not isinstance(vectors, np.ndarray) else list(vectors.reshape(-1, n))
        if not rows or n == 0:
            return cls(np.zeros((0, n), dtype=complex), n)
        M = np.asarray(rows, dtype=complex)
        scale = float(np.linalg.norm(M, axis=1).max())
        if scale == 0:
            return cls(np.zeros((0, n), dtype=complex), n)
        # chunked: orthogonalise each block of rows against the basis so far
        thr = tol * scale
        Q = np.zeros((0, n), dtype=complex)
        for i in range(0, len(M), _SPAN_CHUNK):
            C = M[i:i + _SPAN_CHUNK]
            for _ in range(2 if len(Q) else 0):
                C = C - (C @ np.conj(Q).T) @ Q
            if float(np.linalg.norm(C, axis=1).max()) <= thr:
                continue
            if C.shape[1] > 2 * C.shape[0]:
                # right singular vectors of C through a QR of C^H and a small SVD
                q, r = np.linalg.qr(np.conj(C).T)
                u, sv, _ = np.linalg.svd(r)
                vh = np.conj(q @ u).T
            else:
                _, sv, vh = np.linalg.svd(C, full_matrices=False)
            new = vh[: len(sv)][sv > thr]
            if len(Q) and len(new):
                new = new - (new @ np.conj(Q).T) @ Q
                q, _ = np.linalg.qr(new.T)
                new = q.T
            Q = np.vstack([Q, new])
        return cls(Q, n)

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((0, n), dtype=complex), n)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n, dtype=complex), n)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def coords(self, v: np.ndarray) -> np.ndarray:
        return np.conj(self.basis) @ np.ravel(v)

    def project(self, v: np.ndarray) -> np.ndarray:
        return self.basis.T @ self.coords(v)

    def residual(self, v: np.ndarray) -> float:
        v = np.ravel(v)
        return float(np.linalg.norm(v - self.project(v)))

    def contains(self, v: np.ndarray, tol: float | None = None) -> bool:
        tol = default_tol() if tol is None else tol
        v = np.ravel(v)
        return self.residual(v) <= tol * max(1.0, float(np.linalg.norm(v)))

    def contains_all(self, vectors: Iterable[np.ndarray], tol: float | None = None) -> bool:
        return all(self.contains(v, tol) for v in vectors)

    def le(self, other: "Subspace", tol: float | None = None) -> bool:
        return other.contains_all(self.basis, tol)

    def equals(self, other: "Subspace", tol: float | None = None) -> bool:
        return self.dim == other.dim and self.le(other, tol)

    def plus(self, other: "Subspace", tol: float | None = None) -> "Subspace":
        return Subspace.span(np.vstack([self.basis, other.basis]), self.n, tol)

    def meet(self, other: "Subspace", tol: float | None = None) -> "Subspace":
        tol = default_tol() if tol is None else tol
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.n)
        # x = B2^T c lies in self iff its component orthogonal to self vanishes
        B2 = other.basis.T
        off = B2 - self.basis.T @ (np.conj(self.basis) @ B2)
        if float(np.abs(off).max()) <= tol:
            return other                            # other lies inside self
        if off.shape[0] >= off.shape[1]:
            off = np.linalg.qr(off, mode="r")      # same singular values and right vectors
        _, s, vh = np.linalg.svd(off, full_matrices=True)
        big = np.zeros(other.dim, dtype=bool)
        big[: len(s)] = s > max(tol, 1e-7)
        null = np.conj(vh[~big])
        return Subspace.span([B2 @ c for c in null], self.n, tol)


# ---------------------------------------------------------------- *-algebras


@dataclass(frozen=True, eq=False)
class MatrixStarAlgebra:
    """A *-closed subalgebra of M_n(C) held as an orthonormal (Frobenius) basis."""

    n: int
    space: Subspace
    tol: float = RANK_TOL

    @classmethod
    def from_span(cls, mats: Iterable[np.ndarray], n: int, tol: float | None = None) -> "MatrixStarAlgebra":
        tol = default_tol() if tol is None else tol
        return cls(n, Subspace.span([np.asarray(m).ravel() for m in mats], n * n, tol), tol)

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def elements(self) -> np.ndarray:
        return self.space.basis.reshape(-1, self.n, self.n)

    def contains(self, M: np.ndarray, tol: float | None = None) -> bool:
        return self.space.contains(np.asarray(M).ravel(), tol if tol is not None else self.tol)

    def residual(self, M: np.ndarray) -> float:
        return self.space.residual(np.asarray(M).ravel())

    def random_element(self, rng: np.random.Generator) -> np.ndarray:
        c = rand_complex(rng, self.dim)
        return np.tensordot(c, self.elements, axes=1) if self.dim else np.zeros((self.n, self.n), complex)

    def random_selfadjoint(self, rng: np.random.Generator) -> np.ndarray:
        x = self.random_element(rng)
        return (x + adjoint(x)) / 2

    def closure_defect(self, rng: np.random.Generator | None = None, samples: int = 4) -> float:
        """Max distance from the span of x*, xy over random elements."""
        rng = rng or np.random.default_rng(0)
        worst = 0.0
        for _ in range(samples):
            x, y = self.random_element(rng), self.random_element(rng)
            scale = max(1.0, np.linalg.norm(x) * np.linalg.norm(y))
            worst = max(worst, self.residual(x @ y) / scale, self.residual(adjoint(x)) / max(1.0, np.linalg.norm(x)))
        return worst

    def is_unital(self) -> bool:
        return self.contains(np.eye(self.n))


def _closed_on_samples(space: "Subspace", letters: np.ndarray, n: int, tol: float) -> bool:
    """x y in the span for two seeded random pairs: the product is bilinear, so
    a span that is not closed fails this for all but a null set of samples."""
    rng = np.random.default_rng(12345)
    for _ in range(2):
        cx, cy = rand_complex(rng, len(letters)), rand_complex(rng, len(letters))
        x, y = np.tensordot(cx, letters, axes=1), np.tensordot(cy, letters, axes=1)
        p = (x @ y).ravel()
        if space.residual(p) > tol * max(1.0, float(np.linalg.norm(p))):
            return False
    return True


def star_algebra_closure(gens: Sequence[np.ndarray], tol: float | None = None) -> MatrixStarAlgebra:
    """Smallest *-subalgebra containing ``gens``: grow the span by products with
    the generators until the dimension stabilises."""
    tol = default_tol() if tol is None else tol
    gens = [np.asarray(g, dtype=complex) for g in gens]
    if not gens:
        raise ValueError("need at least one generator")
    n = gens[0].shape[0]
    for g in gens:
        if g.ndim != 2 or g.shape != (n, n):
            raise ValueError("generators must be square matrices of equal size")
    space = Subspace.span([g.ravel() for g in gens] + [adjoint(g).ravel() for g in gens], n * n, tol)
    letters = space.basis.reshape(-1, n, n)   # the span is *-closed, so words in it give the algebra
    if _closed_on_samples(space, letters, n, tol):
        return MatrixStarAlgebra(n, space, tol)
    frontier = letters
    chunk = max(1, int(2e7 // max(1, len(letters) * n * n)))
    while len(frontier):
        fresh = []
        for i in range(0, len(frontier), chunk):
            prods = pair_products(frontier[i:i + chunk], letters).reshape(-1, n * n)
            scale = max(1.0, float(np.abs(prods).max()))
            off = prods - (prods @ np.conj(space.basis).T) @ space.basis
            off = off[np.linalg.norm(off, axis=1) > tol * scale]
            if len(off):
                add = Subspace.span(off, n * n, tol)
                add = Subspace.span(add.basis - (add.basis @ np.conj(space.basis).T) @ space.basis, n * n, tol)
                space = Subspace(np.vstack([space.basis, add.basis]), n * n)
                fresh.append(add.basis)
        frontier = np.vstack(fresh).reshape(-1, n, n) if fresh else np.zeros((0, n, n))
    return MatrixStarAlgebra(n, space, tol)


# ---------------------------------------------------------------- Wedderburn


@dataclass(eq=False)
class Wedderburn:
    blocks: list[int]                 # matrix sizes, one per simple summand
    projections: list[np.ndarray]     # minimal central projections, same order
    multiplicities: list[int]         # rank(p_i) / n_i on the ambient space
    diagnostics: list[str] = field(default_factory=list)

    @property
    def sorted_blocks(self) -> list[int]:
        return sorted(self.blocks)


def center(alg: MatrixStarAlgebra, rng: np.random.Generator | None = None) -> Subspace:
    """Center of a concrete *-algebra; two random elements generate it generically."""
    rng = rng or np.random.default_rng(12345)
    n, E = alg.n, alg.elements
    if alg.dim == 0:
        return Subspace.zero(n * n)
    probes = [alg.random_element(rng) for _ in range(2)]
    cols = [np.concatenate([(b @ p - p @ b).ravel() for p in probes]) for b in E]
    M = np.array(cols).T
    _, s, vh = np.linalg.svd(M, full_matrices=M.shape[0] < M.shape[1])
    # commutators scale with the probes; the basis E is orthonormal
    scale = max(1.0, max(float(np.linalg.norm(p)) for p in probes))
    keep = np.zeros(alg.dim, dtype=bool)
    keep[: len(s)] = s > alg.tol * scale
    null = np.conj(vh[~keep])
    return Subspace.span([np.tensordot(c, E, axes=1).ravel() for c in null], n * n, alg.tol)


def wedderburn(alg: MatrixStarAlgebra, rng: np.random.Generator | None = None) -> Wedderburn:
    """Simple summands of a concrete finite-dimensional C*-algebra.

    The minimal central projections are the spectral projections of a generic
    self-adjoint central element; block sizes come from dim(p_i A) = n_i^2.
    """
    rng = rng or np.random.default_rng(2024)
    n = alg.n
    diags: list[str] = []
    if alg.dim == 0:
        return Wedderburn([], [], [], diags)
    Z = center(alg, rng)
    zs = Z.basis.reshape(-1, n, n)
    # complex weights: a basis vector may carry a phase such as i P
    c = rng.standard_normal(len(zs)) + 1j * rng.standard_normal(len(zs))
    z = np.tensordot(c, zs, axes=1)
    z = (z + adjoint(z)) / 2
    w, V = np.linalg.eigh(z)
    scale = max(1.0, float(np.max(np.abs(w))))
    groups: list[list[int]] = []
    for i, x in enumerate(w):
        if groups and abs(x - w[groups[-1][-1]]) <= 1e-7 * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    projections, blocks, mults = [], [], []
    for g in groups:
        if np.all(np.abs(w[g]) <= 1e-7 * scale):
            continue  # kernel of the algebra on the ambient space
        P = V[:, g] @ adjoint(V[:, g])
        if not alg.contains(P, 1e-7):
            diags.append(f"spectral projection of rank {len(g)} not in algebra")
        d = Subspace.span([(P @ b).ravel() for b in alg.elements], n * n, alg.tol).dim
        k = int(round(np.sqrt(d)))
        if k * k != d:
            diags.append(f"summand of dimension {d} is not a square")
        projections.append(P)
        blocks.append(k)
        mults.append(len(g) // max(k, 1))
    if sum(b * b for b in blocks) != alg.dim:
        diags.append(f"block dimensions {blocks} do not add up to {alg.dim}")
    if len(blocks) != Z.dim:
        diags.append(f"{len(blocks)} summands but center of dimension {Z.dim}")
    return Wedderburn(blocks, projections, mults, diags)


@dataclass(eq=False)
class FdModel:
    """An explicit *-isomorphism between a concrete algebra and a direct sum of
    full matrix algebras, given by a system of matrix units."""

    alg: MatrixStarAlgebra
    sizes: list[int]
    units: list[np.ndarray]  # units[b][i, j] is the (i, j) matrix unit of block b

    def to_blocks(self, x: np.ndarray) -> list[np.ndarray]:
        out = []
        for U in self.units:
            k = U.shape[0]
            m = np.real(np.trace(U[0, 0]))
            out.append(np.array([[np.vdot(U[i, j], x) / m for j in range(k)] for i in range(k)]))
        return out

    def from_blocks(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        x = np.zeros((self.alg.n, self.alg.n), dtype=complex)
        for U, a in zip(self.units, blocks):
            x = x + np.einsum("ij,ijkl->kl", a, U)
        return x


def fd_model(alg: MatrixStarAlgebra, rng: np.random.Generator | None = None) -> FdModel:
    """Matrix units for every simple summand of ``alg``."""
    rng = rng or np.random.default_rng(777)
    wd = wedderburn(alg, rng)
    if wd.diagnostics:
        raise ValueError("; ".join(wd.diagnostics))
    units = []
    order = sorted(range(len(wd.blocks)), key=lambda i: (wd.blocks[i], i))
    for i in order:
        P, k = wd.projections[i], wd.blocks[i]
        h = P @ alg.random_selfadjoint(rng) @ P
        w, V = np.linalg.eigh(h)
        # eigenvalues of a generic element of M_k (x) 1_m: k distinct values,
        # each repeated m times, plus zeros off the support of P
        support = V[:, np.abs(np.diag(adjoint(V) @ P @ V)) > 0.5]
        hw = np.real(np.diag(adjoint(support) @ h @ support))
        idx = np.argsort(hw)
        support, hw = support[:, idx], hw[idx]
        m = support.shape[1] // k
        E = [support[:, j * m:(j + 1) * m] @ adjoint(support[:, j * m:(j + 1) * m]) for j in range(k)]
        x = alg.random_element(rng)
        U = np.zeros((k, k, alg.n, alg.n), dtype=complex)
        U[0, 0] = E[0]
        for j in range(1, k):
            y = E[0] @ x @ E[j]
            U[0, j] = y / spectral_norm(y)
            U[j, 0] = adjoint(U[0, j])
        for a in range(1, k):
            for b in range(1, k):
                U[a, b] = U[a, 0] @ U[0, b]
        units.append(U)
    return FdModel(alg, [wd.blocks[i] for i in order], units)
