"""Finite-dimensional C*-algebras as direct sums of full matrix blocks.

Elements are block-diagonal matrices on the standard space H_A = (+)_b C^{n_b}.
Ideals are block subsets, so lattice operations are exact. A *-isomorphism
between ideals is a block bijection plus one unitary per block; two such maps
are equal when they agree on matrix units, which makes the unitaries matter
only up to phase.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .core import MatrixStarAlgebra, Subspace, adjoint, default_tol, random_unitary, spectral_norm


@dataclass(frozen=True)
class FdCStar:
    labels: tuple[str, ...]
    sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.sizes):
            raise ValueError("one size per block label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate block label")
        if any(n < 1 for n in self.sizes):
            raise ValueError("block sizes must be positive")

    @classmethod
    def from_sizes(cls, sizes: Iterable[int], prefix: str = "b") -> "FdCStar":
        sizes = tuple(int(n) for n in sizes)
        return cls(tuple(f"{prefix}{i + 1}" for i in range(len(sizes))), sizes)

    @classmethod
    def commutative(cls, k: int, prefix: str = "b") -> "FdCStar":
        return cls.from_sizes([1] * k, prefix)

    @classmethod
    def from_json(cls, data: Mapping) -> "FdCStar":
        blocks = data["blocks"]
        return cls(tuple(str(b["label"]) for b in blocks), tuple(int(b["n"]) for b in blocks))

    def to_json(self) -> dict:
        return {"blocks": [{"label": b, "n": n} for b, n in zip(self.labels, self.sizes)]}

    # sizes and offsets
    @property
    def dim(self) -> int:
        return sum(n * n for n in self.sizes)

    @property
    def hdim(self) -> int:
        return sum(self.sizes)

    def size(self, label: str) -> int:
        return self.sizes[self.labels.index(label)]

    def offset(self, label: str) -> int:
        i = self.labels.index(label)
        return sum(self.sizes[:i])

    def is_commutative(self) -> bool:
        return all(n == 1 for n in self.sizes)

    def check_labels(self, labels: Iterable[str]) -> frozenset[str]:
        labels = frozenset(labels)
        unknown = labels - set(self.labels)
        if unknown:
            raise KeyError(f"unknown block labels {sorted(unknown)}")
        return labels

    # elements
    def block(self, a: np.ndarray, label: str) -> np.ndarray:
        o, n = self.offset(label), self.size(label)
        return a[o:o + n, o:o + n]

    def place(self, label: str, m: np.ndarray) -> np.ndarray:
        out = np.zeros((self.hdim, self.hdim), dtype=complex)
        o, n = self.offset(label), self.size(label)
        out[o:o + n, o:o + n] = m
        return out

    def from_blocks(self, blocks: Mapping[str, np.ndarray]) -> np.ndarray:
        out = np.zeros((self.hdim, self.hdim), dtype=complex)
        for b, m in blocks.items():
            o, n = self.offset(b), self.size(b)
            out[o:o + n, o:o + n] = m
        return out

    def unit(self, labels: Iterable[str] | None = None) -> np.ndarray:
        labels = self.labels if labels is None else labels
        return self.from_blocks({b: np.eye(self.size(b)) for b in labels})

    def matrix_units(self, labels: Iterable[str] | None = None) -> list[tuple[str, int, int, np.ndarray]]:
        labels = self.labels if labels is None else [b for b in self.labels if b in set(labels)]
        out = []
        for b in labels:
            n = self.size(b)
            for i in range(n):
                for j in range(n):
                    m = np.zeros((n, n), dtype=complex)
                    m[i, j] = 1
                    out.append((b, i, j, self.place(b, m)))
        return out

    def basis(self, labels: Iterable[str] | None = None) -> list[np.ndarray]:
        return [m for *_, m in self.matrix_units(labels)]

    def coords(self, a: np.ndarray, labels: Iterable[str] | None = None) -> np.ndarray:
        labels = self.labels if labels is None else [b for b in self.labels if b in set(labels)]
        return np.concatenate([self.block(a, b).ravel() for b in labels]) if labels else np.zeros(0, complex)

    def from_coords(self, v: np.ndarray, labels: Iterable[str] | None = None) -> np.ndarray:
        labels = self.labels if labels is None else [b for b in self.labels if b in set(labels)]
        out, k = {}, 0
        for b in labels:
            n = self.size(b)
            out[b] = np.asarray(v[k:k + n * n]).reshape(n, n)
            k += n * n
        return self.from_blocks(out)

    def off_block_defect(self, a: np.ndarray) -> float:
        """Norm of the part of ``a`` outside the block diagonal."""
        return float(np.linalg.norm(a - self.from_blocks({b: self.block(a, b) for b in self.labels})))

    def random_element(self, rng: np.random.Generator, labels: Iterable[str] | None = None) -> np.ndarray:
        labels = self.labels if labels is None else labels
        return self.from_blocks({
            b: rng.standard_normal((self.size(b),) * 2) + 1j * rng.standard_normal((self.size(b),) * 2)
            for b in labels
        })

    def as_matrix_algebra(self) -> MatrixStarAlgebra:
        return MatrixStarAlgebra.from_span(self.basis(), self.hdim)


@dataclass(frozen=True)
class Ideal:
    parent: FdCStar
    support: frozenset[str]

    @property
    def labels(self) -> list[str]:
        return [b for b in self.parent.labels if b in self.support]

    @property
    def projection(self) -> np.ndarray:
        return self.parent.unit(self.support)

    @property
    def dim(self) -> int:
        return sum(self.parent.size(b) ** 2 for b in self.support)

    def basis(self) -> list[np.ndarray]:
        return self.parent.basis(self.support)

    def meet(self, other: "Ideal") -> "Ideal":
        return Ideal(self.parent, self.support & other.support)

    def join(self, other: "Ideal") -> "Ideal":
        return Ideal(self.parent, self.support | other.support)

    def le(self, other: "Ideal") -> bool:
        return self.support <= other.support

    def contains(self, a: np.ndarray, tol: float | None = None) -> bool:
        tol = default_tol() if tol is None else tol
        p = self.projection
        return float(np.linalg.norm(a - p @ a @ p)) <= tol * max(1.0, float(np.linalg.norm(a)))

    def subspace(self) -> Subspace:
        n = self.parent.hdim
        return Subspace.span([m.ravel() for m in self.basis()], n * n)


def ideal_of_blocks(A: FdCStar, labels: Iterable[str]) -> Ideal:
    return Ideal(A, A.check_labels(labels))


@dataclass(frozen=True, eq=False)
class PartialIsoAlg:
    """A *-isomorphism from the ideal spanned by ``sigma``'s keys (in ``src``)
    onto the ideal spanned by its values (in ``dst``), acting on block b by
    a -> U_b a U_b^* placed in block sigma(b)."""

    src: FdCStar
    dst: FdCStar
    sigma: Mapping[str, str]
    unitaries: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        sigma = dict(self.sigma)
        self.src.check_labels(sigma)
        self.dst.check_labels(sigma.values())
        if len(set(sigma.values())) != len(sigma):
            raise ValueError("block map is not injective")
        us = {}
        for b, c in sigma.items():
            n = self.src.size(b)
            if self.dst.size(c) != n:
                raise ValueError(f"block {b} (size {n}) sent to block {c} of size {self.dst.size(c)}")
            u = np.asarray(self.unitaries.get(b, np.eye(n)), dtype=complex)
            if u.shape != (n, n):
                raise ValueError(f"unitary for block {b} has shape {u.shape}")
            us[b] = u
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "unitaries", us)

    @property
    def source(self) -> Ideal:
        return Ideal(self.src, frozenset(self.sigma))

    @property
    def target(self) -> Ideal:
        return Ideal(self.dst, frozenset(self.sigma.values()))

    def apply(self, a: np.ndarray) -> np.ndarray:
        return self.dst.from_blocks({
            c: self.unitaries[b] @ self.src.block(a, b) @ adjoint(self.unitaries[b])
            for b, c in self.sigma.items()
        })

    __call__ = apply

    def inverse(self) -> "PartialIsoAlg":
        return PartialIsoAlg(
            self.dst, self.src,
            {c: b for b, c in self.sigma.items()},
            {c: adjoint(self.unitaries[b]) for b, c in self.sigma.items()},
        )

    def unitary_defect(self) -> float:
        return max((float(np.linalg.norm(u @ adjoint(u) - np.eye(len(u)))) for u in self.unitaries.values()), default=0.0)

    def restrict(self, labels: Iterable[str]) -> "PartialIsoAlg":
        keep = set(labels)
        return PartialIsoAlg(self.src, self.dst,
                             {b: c for b, c in self.sigma.items() if b in keep},
                             {b: u for b, u in self.unitaries.items() if b in keep})

    def to_json(self) -> dict:
        return {
            "sigma": dict(sorted(self.sigma.items())),
            "unitaries": {b: _matrix_to_json(u) for b, u in sorted(self.unitaries.items())},
        }

    @classmethod
    def from_json(cls, src: FdCStar, data: Mapping, dst: FdCStar | None = None) -> "PartialIsoAlg":
        us = {b: _matrix_from_json(u) for b, u in data.get("unitaries", {}).items()}
        return cls(src, dst or src, dict(data["sigma"]), us)


def identity_iso(A: FdCStar, labels: Iterable[str] | None = None) -> PartialIsoAlg:
    labels = A.labels if labels is None else labels
    return PartialIsoAlg(A, A, {b: b for b in labels})


def compose_partial_iso(phi: PartialIsoAlg, psi: PartialIsoAlg) -> PartialIsoAlg:
    """phi o psi on psi^{-1}(dom phi & ran psi); empty domain allowed."""
    sigma, us = {}, {}
    for b, c in psi.sigma.items():
        if c in phi.sigma:
            sigma[b] = phi.sigma[c]
            us[b] = phi.unitaries[c] @ psi.unitaries[b]
    return PartialIsoAlg(psi.src, phi.dst, sigma, us)


def action_defect(phi: PartialIsoAlg, psi: PartialIsoAlg, labels: Iterable[str]) -> float:
    """Max difference of two maps on the matrix units of ``labels``."""
    worst = 0.0
    for m in phi.src.basis(labels):
        worst = max(worst, float(np.linalg.norm(phi.apply(m) - psi.apply(m))))
    return worst


def extends(phi: PartialIsoAlg, psi: PartialIsoAlg, tol: float | None = None) -> bool:
    """True iff dom psi <= dom phi and the two maps agree on dom psi."""
    tol = default_tol() if tol is None else tol
    if not set(psi.sigma) <= set(phi.sigma):
        return False
    if any(phi.sigma[b] != c for b, c in psi.sigma.items()):
        return False
    return action_defect(phi, psi, psi.sigma) <= max(tol, 1e-12) * 10


def norm_defect(phi: PartialIsoAlg, rng: np.random.Generator, samples: int = 5) -> float:
    """How far phi is from isometric on random elements of its domain."""
    worst = 0.0
    for _ in range(samples):
        a = phi.src.random_element(rng, phi.sigma)
        worst = max(worst, abs(spectral_norm(phi.apply(a)) - spectral_norm(a)))
    return worst


def random_partial_iso(A: FdCStar, rng: np.random.Generator, sigma: Mapping[str, str]) -> PartialIsoAlg:
    return PartialIsoAlg(A, A, dict(sigma), {b: random_unitary(rng, A.size(b)) for b in sigma})


def _matrix_to_json(u: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(u)]


def _matrix_from_json(data) -> np.ndarray:
    def entry(z):
        if isinstance(z, (list, tuple)):
            return complex(z[0], z[1])
        if isinstance(z, str):
            return complex(z.replace(" ", ""))
        return complex(z)

    return np.array([[entry(z) for z in row] for row in data], dtype=complex)
