"""Seeded random corpora and the builtin example systems.

Partial actions are produced the way every one arises: restrict a global
action to an ideal. Global actions are induced from stabilizers; a stabilizer
H acts on its block by Ad of a sum of characters of H, and each block of an
orbit is conjugated by its own random unitary. Partial representations are
compressions of monomial representations to coordinate subsets, summed and
conjugated by a random unitary.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from itertools import product
from pathlib import Path

import numpy as np

from .core import FiniteGroup, adjoint, random_unitary, small_groups
from .dilation import PartialRep
from .fdalg import FdCStar, PartialIsoAlg
from .paction import EnvelopeWitness, PartialActionAlg, envelope_by_orbit, make_global

BUILTINS = ("sys-triv", "sys-p2", "sys-swap", "sys-sier", "prep-z2")


def characters(G: FiniteGroup) -> list[np.ndarray]:
    """One-dimensional characters, found by search over |G|-th roots of unity."""
    n = G.order
    roots = np.exp(2j * np.pi * np.arange(n) / n)
    out = []
    for ks in product(range(n), repeat=n):
        chi = roots[list(ks)]
        if abs(chi[G.e] - 1) > 1e-12:
            continue
        if all(abs(chi[G.mul(s, t)] - chi[s] * chi[t]) < 1e-9 for s in G for t in G):
            out.append(chi)
    return out


def _subgroup_group(G: FiniteGroup, H: frozenset) -> tuple[FiniteGroup, list[int]]:
    elems = sorted(H)
    pos = {h: i for i, h in enumerate(elems)}
    table = tuple(tuple(pos[G.mul(a, b)] for b in elems) for a in elems)
    return FiniteGroup(tuple(G.label(h) for h in elems), table, pos[G.e]), elems


def _cosets(G: FiniteGroup, H: frozenset) -> list[int]:
    """A representative of each left coset gH."""
    reps, seen = [], set()
    for g in G:
        if g not in seen:
            reps.append(g)
            seen |= {G.mul(g, h) for h in H}
    return reps


def random_global(G: FiniteGroup, rng: np.random.Generator, max_blocks: int = 5, max_dim: int | None = None,
                  commutative: bool = False) -> PartialActionAlg:
    """A random global action with at most ``max_blocks`` blocks and algebra dim <= ``max_dim``."""
    subgroups = G.subgroups()
    orbits = []
    blocks = dim = 0
    for _ in range(4):
        H = subgroups[rng.integers(len(subgroups))]
        k = G.order // len(H)
        n = 1 if commutative else int(rng.integers(1, 3))
        if blocks + k > max_blocks or (max_dim is not None and dim + k * n * n > max_dim):
            continue
        orbits.append((H, n))
        blocks += k
        dim += k * n * n
        if rng.random() < 0.4:
            break
    if not orbits:
        orbits = [(frozenset(G), 1)]
    labels, sizes, maps_data = [], [], [dict() for _ in G]
    units = [dict() for _ in G]
    for o, (H, n) in enumerate(orbits):
        Hg, helems = _subgroup_group(G, H)
        chars = characters(Hg)
        picks = [chars[rng.integers(len(chars))] for _ in range(n)]
        # rep of H on C^n: diagonal characters
        rep_h = {h: np.diag([chi[i] for chi in picks]) for i, h in enumerate(helems)}
        reps = _cosets(G, H)
        lab = [f"o{o}c{j}" for j in range(len(reps))]
        W = [random_unitary(rng, n) for _ in reps]
        labels += lab
        sizes += [n] * len(reps)
        for t in G:
            for j, g in enumerate(reps):
                tg = G.mul(t, g)
                kk = next(k for k, r in enumerate(reps) if G.mul(G.inv(r), tg) in H)
                h = G.mul(G.inv(reps[kk]), tg)
                maps_data[t][lab[j]] = lab[kk]
                units[t][lab[j]] = W[kk] @ rep_h[h] @ adjoint(W[j])
    A = FdCStar(tuple(labels), tuple(sizes))
    return make_global(G, A, [PartialIsoAlg(A, A, maps_data[t], units[t]) for t in G])


@dataclass(frozen=True, eq=False)
class CorpusSystem:
    name: str
    alpha: PartialActionAlg
    witness: EnvelopeWitness        # orbit envelope of the generating global action


def random_system(rng: np.random.Generator, groups=None, max_blocks: int = 5, max_dim: int = 6,
                  commutative: bool = False, name: str = "") -> CorpusSystem:
    groups = groups or small_groups(4)
    G = groups[rng.integers(len(groups))]
    while True:
        beta = random_global(G, rng, max_blocks=max_blocks, commutative=commutative)
        labels = [b for b in beta.A.labels if rng.random() < 0.5]
        if not labels:
            labels = [beta.A.labels[rng.integers(len(beta.A.labels))]]
        if sum(beta.A.size(b) ** 2 for b in labels) <= max_dim:
            break
    alpha, w = envelope_by_orbit(beta, labels)
    return CorpusSystem(name, alpha, w)


def system_corpus(seed: int, count: int, max_order: int = 4, max_blocks: int = 5, max_dim: int = 6,
                  commutative: bool | None = None) -> list[CorpusSystem]:
    """``commutative=None`` mixes: roughly half the systems have a non-scalar block."""
    rng = np.random.default_rng(seed)
    groups = small_groups(max_order)
    out = []
    for i in range(count):
        comm = bool(rng.random() < 0.5) if commutative is None else commutative
        out.append(random_system(rng, groups, max_blocks, max_dim, comm, name=f"corpus-{seed}-{i}"))
    return out


# ---------------------------------------------------------------- partial representations


def _monomial(G: FiniteGroup, H: frozenset, chi_row: np.ndarray | None) -> list[np.ndarray]:
    """Permutation representation on G/H, twisted by a character of G."""
    reps = _cosets(G, H)
    m = len(reps)
    out = []
    for t in G:
        V = np.zeros((m, m), complex)
        for j, g in enumerate(reps):
            tg = G.mul(t, g)
            k = next(k for k, r in enumerate(reps) if G.mul(G.inv(r), tg) in H)
            V[k, j] = 1.0
        out.append(V * (1.0 if chi_row is None else chi_row[t]))
    return out


def random_prep(rng: np.random.Generator, orders=(2, 3, 4), max_dim: int = 4) -> PartialRep:
    groups = [g for g in small_groups(max(orders)) if g.order in orders]
    G = groups[rng.integers(len(groups))]
    chars = characters(G)
    subgroups = G.subgroups()
    target = int(rng.integers(1, max_dim + 1))
    pieces = []
    d = 0
    while d < target:
        H = subgroups[rng.integers(len(subgroups))]
        chi = chars[rng.integers(len(chars))] if rng.random() < 0.5 else None
        V = _monomial(G, H, chi)
        m = V[0].shape[0]
        keep = [i for i in range(m) if rng.random() < 0.6][: target - d]
        if not keep:
            continue
        pieces.append([v[np.ix_(keep, keep)] for v in V])
        d += len(keep)
    u = []
    for t in G:
        M = np.zeros((d, d), complex)
        o = 0
        for p in pieces:
            k = p[t].shape[0]
            M[o:o + k, o:o + k] = p[t]
            o += k
        u.append(M)
    W = random_unitary(rng, d)
    return PartialRep(G, [W @ m @ adjoint(W) for m in u])


def prep_corpus(seed: int, count: int, orders=(2, 3, 4), max_dim: int = 4) -> list[PartialRep]:
    rng = np.random.default_rng(seed)
    return [random_prep(rng, orders, max_dim) for _ in range(count)]


# ---------------------------------------------------------------- documents


def builtin_text(name: str) -> str:
    if name not in BUILTINS:
        raise KeyError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")
    return resources.files("partact").joinpath("data").joinpath(f"{name}.json").read_text()


def _read_text(source: str) -> tuple[str, str]:
    path = Path(source)
    name = source if source in BUILTINS else path.stem
    if name in BUILTINS and not path.exists():
        return builtin_text(name), f"<builtin {name}>"
    return path.read_text(), source


def _parse(text: str, where: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{where}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ValueError(f"{where}: line 1: top level must be a JSON object")
    return doc


def read_document(source: str) -> dict:
    """Parse a JSON document from a path or a builtin name. Errors carry line info."""
    return _parse(*_read_text(source))


def _line_of(text: str, exc: Exception) -> int:
    """Line of the first mention of the offending key or label; 1 when none is found."""
    first = exc.args[0] if exc.args else None
    names = [first] if isinstance(first, str) else []
    names += re.findall(r"'([^']+)'", str(exc))
    for name in names:
        pos = text.find(f'"{name}"')
        if pos >= 0:
            return text.count("\n", 0, pos) + 1
    return 1


def load(source: str):
    """Build the object a document describes, dispatching on its "kind"."""
    from .fellbundle import RepresentedBundle
    from .finspace import PartialActionTop

    text, where = _read_text(source)
    doc = _parse(text, where)
    kind = doc.get("kind")
    table = {"alg": PartialActionAlg, "top": PartialActionTop, "bundle": RepresentedBundle, "prep": PartialRep}
    if kind not in table:
        raise ValueError(f"{where}: line {_line_of(text, KeyError('kind'))}: \"kind\" must be one of "
                         f"{sorted(table)}, got {kind!r}")
    try:
        return table[kind].from_json(doc), doc
    except (KeyError, TypeError, IndexError, ValueError, AttributeError) as exc:
        raise ValueError(f"{where}: line {_line_of(text, exc)}: schema error for kind {kind!r}: {exc!r}") from None
