"""Finite topological spaces, topological partial actions and their enveloping spaces."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Mapping

from .core import FiniteGroup, Report

Point = str
OpenSet = frozenset


@dataclass(frozen=True)
class FinTop:
    points: tuple[Point, ...]
    opens: frozenset[frozenset[Point]]

    @classmethod
    def make(cls, points: Iterable, opens: Iterable[Iterable]) -> "FinTop":
        pts = tuple(str(p) for p in points)
        return cls(pts, frozenset(frozenset(str(x) for x in U) for U in opens))

    @classmethod
    def discrete(cls, points: Iterable) -> "FinTop":
        pts = tuple(str(p) for p in points)
        return cls(pts, frozenset(frozenset(s) for s in _powerset(pts)))

    @classmethod
    def indiscrete(cls, points: Iterable) -> "FinTop":
        pts = tuple(str(p) for p in points)
        return cls(pts, frozenset({frozenset(), frozenset(pts)}))

    def validate(self) -> Report:
        rep = Report()
        whole = frozenset(self.points)
        rep.add("contains empty set", frozenset() in self.opens)
        rep.add("contains whole space", whole in self.opens)
        rep.add("opens are subsets", all(U <= whole for U in self.opens))
        bad_union = [(sorted(U), sorted(V)) for U in self.opens for V in self.opens if U | V not in self.opens]
        bad_meet = [(sorted(U), sorted(V)) for U in self.opens for V in self.opens if U & V not in self.opens]
        rep.add("closed under union", not bad_union, detail=bad_union[:1] or None)
        rep.add("closed under intersection", not bad_meet, detail=bad_meet[:1] or None)
        return rep

    def is_open(self, S: Iterable) -> bool:
        return frozenset(S) in self.opens

    def minimal_nbhd(self, x: Point) -> frozenset[Point]:
        out = frozenset(self.points)
        for U in self.opens:
            if x in U:
                out &= U
        return out

    def is_discrete(self) -> bool:
        return all(frozenset({x}) in self.opens for x in self.points)

    def to_json(self) -> dict:
        return {"points": list(self.points), "opens": sorted(sorted(U) for U in self.opens)}


def _powerset(items):
    items = list(items)
    for k in range(len(items) + 1):
        yield from combinations(items, k)


def is_hausdorff(S: FinTop) -> bool:
    """Pairwise separation by disjoint opens. For finite spaces this coincides
    with discreteness, which is asserted as a cross-check."""
    sep = all(
        any(x in U and y in V and not (U & V) for U in S.opens for V in S.opens)
        for x, y in combinations(S.points, 2)
    )
    assert sep == S.is_discrete(), "finite Hausdorff space must be discrete"
    return sep


# ---------------------------------------------------------------- partial actions


@dataclass(frozen=True, eq=False)
class PartialActionTop:
    G: FiniteGroup
    X: FinTop
    domains: tuple[frozenset[Point], ...]          # X_t, indexed by group element
    maps: tuple[Mapping[Point, Point], ...]         # alpha_t: X_{t^-1} -> X_t

    def alpha(self, t: int, x: Point) -> Point:
        return self.maps[t][x]

    def to_json(self) -> dict:
        lab = self.G.label
        return {
            "kind": "top",
            "group": self.G.to_json(),
            "points": list(self.X.points),
            "opens": sorted(sorted(U) for U in self.X.opens),
            "Xt": {lab(t): sorted(self.domains[t]) for t in self.G},
            "alpha": {lab(t): dict(sorted(self.maps[t].items())) for t in self.G},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "PartialActionTop":
        G = FiniteGroup.from_json(data["group"])
        X = FinTop.make(data["points"], data["opens"])
        dom = tuple(frozenset(str(x) for x in data["Xt"][G.label(t)]) for t in G)
        maps = tuple({str(k): str(v) for k, v in data["alpha"][G.label(t)].items()} for t in G)
        return cls(G, X, dom, maps)


def global_action(G: FiniteGroup, X: FinTop, act) -> PartialActionTop:
    """Wrap a global action given as act(t, x)."""
    whole = frozenset(X.points)
    return PartialActionTop(G, X, tuple(whole for _ in G), tuple({x: act(t, x) for x in X.points} for t in G))


def validate_top(alpha: PartialActionTop) -> Report:
    G, X = alpha.G, alpha.X
    rep = Report()
    rep.extend(X.validate(), "topology: ")
    whole = frozenset(X.points)
    e = G.e
    rep.add("X_e = X", alpha.domains[e] == whole)
    rep.add("alpha_e = id", all(alpha.maps[e].get(x) == x for x in X.points))
    for t in G:
        name = G.label(t)
        ti = G.inv(t)
        Xt, Xti, m = alpha.domains[t], alpha.domains[ti], alpha.maps[t]
        rep.add(f"X_{name} open", Xt in X.opens, detail=sorted(Xt))
        ok = set(m) == set(Xti) and set(m.values()) == set(Xt) and len(set(m.values())) == len(m)
        rep.add(f"alpha_{name} bijection X_{{t^-1}} -> X_t", ok)
        if not ok:
            continue
        inv_ok = all(alpha.maps[ti].get(m[x]) == x for x in Xti)
        rep.add(f"alpha_{{{name}^-1}} = alpha_{name}^-1", inv_ok)
        # homeomorphism: open subsets of X_{t^-1} go to open subsets of X_t
        bad = [sorted(U) for U in X.opens if U <= Xti and frozenset(m[x] for x in U) not in X.opens]
        rep.add(f"alpha_{name} open map", not bad, detail=bad[:1] or None)
        for s in G:
            lhs = frozenset(m[x] for x in Xti & alpha.domains[s])
            rhs = Xt & alpha.domains[G.mul(t, s)]
            if lhs != rhs:
                rep.add(f"alpha_{name}(X_{{t^-1}} & X_{G.label(s)}) = X_t & X_ts", False,
                        detail={"lhs": sorted(lhs), "rhs": sorted(rhs)})
    for s, t in product(G, G):
        st = G.mul(s, t)
        for x in alpha.domains[G.inv(t)]:
            y = alpha.maps[t][x]
            if y in alpha.maps[s]:
                z = alpha.maps[s][y]
                if alpha.maps[st].get(x) != z:
                    rep.add(f"alpha_{G.label(st)} extends alpha_{G.label(s)} alpha_{G.label(t)}", False,
                            detail={"point": x})
    if all(c.ok for c in rep.checks):
        rep.add("partial action axioms", True)
    return rep


# ---------------------------------------------------------------- enveloping space


@dataclass(frozen=True, eq=False)
class EnvelopingSpace:
    space: FinTop
    action: PartialActionTop        # global action of G on ``space``
    iota: Mapping[Point, Point]
    classes: Mapping[tuple[int, Point], Point]   # the quotient map q


def _class_label(G: FiniteGroup, t: int, x: Point) -> str:
    return f"[{G.label(t)},{x}]"


def enveloping_space(alpha: PartialActionTop, brute_force_limit: int = 20) -> EnvelopingSpace:
    """(G x X)/~ with (r,x) ~ (s,y) iff x in X_{r^-1 s} and alpha_{s^-1 r}(x) = y."""
    if not validate_top(alpha):
        raise ValueError("not a valid partial action")
    G, X = alpha.G, alpha.X
    pairs = [(t, x) for t in G for x in X.points]
    rep: dict[tuple[int, Point], tuple[int, Point]] = {}
    for r, x in pairs:
        if (r, x) in rep:
            continue
        for s in G:
            u = G.mul(G.inv(r), s)
            if x in alpha.domains[u]:
                y = alpha.maps[G.mul(G.inv(s), r)][x]
                rep[(s, y)] = (r, x)
    labels = {p: _class_label(G, *rep[p]) for p in pairs}
    points = tuple(dict.fromkeys(labels[p] for p in pairs))
    slices = {t: {x: labels[(t, x)] for x in X.points} for t in G}

    def preimage_open(U: frozenset) -> bool:
        return all(frozenset(x for x in X.points if slices[t][x] in U) in X.opens for t in G)

    if len(points) <= brute_force_limit:
        opens = frozenset(frozenset(S) for S in _powerset(points) if preimage_open(frozenset(S)))
    else:
        opens = quotient_opens_by_neighbourhoods(points, preimage_open, slices, X)
    space = FinTop(points, opens)
    act = {t: {labels[(s, x)]: labels[(G.mul(t, s), x)] for s in G for x in X.points} for t in G}
    action = PartialActionTop(G, space, tuple(frozenset(points) for _ in G), tuple(act[t] for t in G))
    iota = {x: labels[(G.e, x)] for x in X.points}
    return EnvelopingSpace(space, action, iota, labels)


def quotient_opens_by_neighbourhoods(points, preimage_open, slices, X: FinTop) -> frozenset:
    """Quotient topology via minimal open neighbourhoods (for large quotients)."""
    nbhd = {}
    for c in points:
        U = {c}
        while True:
            grown = set(U)
            for t, sl in slices.items():
                pre = [x for x in X.points if sl[x] in U]
                for x in pre:
                    grown |= {sl[y] for y in X.minimal_nbhd(x)}
            if grown == U:
                break
            U = grown
        nbhd[c] = frozenset(U)
    # opens are exactly the down-closed unions of minimal neighbourhoods
    opens = {frozenset()}
    frontier = [frozenset()]
    while frontier:
        S = frontier.pop()
        for c in points:
            T = S | nbhd[c]
            if T not in opens:
                opens.add(T)
                frontier.append(T)
    assert all(preimage_open(U) for U in opens)
    return frozenset(opens)


def graph_closed(alpha: PartialActionTop) -> bool:
    """Each graph of alpha_t closed in X x X (G is discrete)."""
    X = alpha.X
    nb = {x: X.minimal_nbhd(x) for x in X.points}
    for t in alpha.G:
        graph = {(x, alpha.maps[t][x]) for x in alpha.domains[alpha.G.inv(t)]}
        for a, b in product(X.points, X.points):
            if (a, b) in graph:
                continue
            if any((x, y) in graph for x in nb[a] for y in nb[b]):
                return False
    return True


def is_continuous(f: Mapping[Point, Point], X: FinTop, Y: FinTop) -> bool:
    return all(frozenset(x for x in X.points if f[x] in V) in X.opens for V in Y.opens)


def universal_factor(alpha: PartialActionTop, beta: PartialActionTop, psi: Mapping[Point, Point]) -> dict:
    """Extend an equivariant continuous psi: X -> Y (beta global) to env X.

    Returns the extension; raises ValueError if psi is not a morphism or the
    extension is ill-defined or discontinuous.
    """
    G = alpha.G
    Y = beta.X
    if any(beta.domains[t] != frozenset(Y.points) for t in G):
        raise ValueError("target action is not global")
    if set(psi) != set(alpha.X.points) or not set(psi.values()) <= set(Y.points):
        raise ValueError("psi is not a map X -> Y")
    if not is_continuous(psi, alpha.X, Y):
        raise ValueError("psi is not continuous")
    for t in G:
        for x in alpha.domains[G.inv(t)]:
            if psi[alpha.maps[t][x]] != beta.maps[t][psi[x]]:
                raise ValueError(f"psi not equivariant at t={G.label(t)}, x={x}")
    env = enveloping_space(alpha)
    ext: dict[Point, Point] = {}
    for (t, x), c in env.classes.items():
        val = beta.maps[t][psi[x]]
        if ext.setdefault(c, val) != val:
            raise ValueError("extension is not well defined")
    if not is_continuous(ext, env.space, Y):
        raise ValueError("extension is not continuous")
    # uniqueness: every class is gamma_t(iota(x)), so equivariance and
    # agreement on iota(X) force the value everywhere
    for (t, x), c in env.classes.items():
        assert env.action.maps[t][env.iota[x]] == c
    return ext


def gelfand_bridge(alpha: PartialActionTop):
    """The commutative algebra system C(X) for a discrete X: one block per point."""
    from .fdalg import FdCStar, PartialIsoAlg
    from .paction import PartialActionAlg

    if not alpha.X.is_discrete():
        raise ValueError("no commutative model for a non-discrete space")
    A = FdCStar(tuple(alpha.X.points), tuple(1 for _ in alpha.X.points))
    D = tuple(frozenset(alpha.domains[t]) for t in alpha.G)
    maps = tuple(PartialIsoAlg(A, A, dict(alpha.maps[t])) for t in alpha.G)
    return PartialActionAlg(alpha.G, A, D, maps)


def spaces_on(points: tuple[Point, ...]) -> list[FinTop]:
    """Every topology on ``points`` (brute force; fine for <= 4 points)."""
    subsets = [frozenset(s) for s in _powerset(points)]
    whole = frozenset(points)
    inner = [s for s in subsets if s and s != whole]
    out = []
    for mask in range(1 << len(inner)):
        opens = {frozenset(), whole} | {inner[i] for i in range(len(inner)) if mask >> i & 1}
        if all(U | V in opens and U & V in opens for U in opens for V in opens):
            out.append(FinTop(points, frozenset(opens)))
    return out


def all_partial_actions(G: FiniteGroup, X: FinTop):
    """Enumerate all valid topological partial actions of G on X (tiny cases)."""
    from itertools import permutations

    pts = X.points
    opens = sorted(X.opens, key=lambda U: (len(U), sorted(U)))
    gens = [t for t in G if t != G.e]
    # choose X_t open with |X_t| = |X_{t^-1}| and a bijection; involutions pair with themselves
    done = set()
    pairs = []
    for t in gens:
        if t in done:
            continue
        ti = G.inv(t)
        done |= {t, ti}
        pairs.append((t, ti))

    def choices(t, ti):
        for U in opens:
            for V in opens:
                if len(U) != len(V) or (t == ti and U != V):
                    continue
                for img in permutations(sorted(U)):
                    m = dict(zip(sorted(V), img))
                    if t == ti and any(m[m[x]] != x for x in m):
                        continue
                    yield U, V, m

    def rec(i, dom, maps):
        if i == len(pairs):
            cand = PartialActionTop(G, X, tuple(dom[t] for t in G), tuple(maps[t] for t in G))
            if validate_top(cand):
                yield cand
            return
        t, ti = pairs[i]
        for U, V, m in choices(t, ti):
            d2, m2 = dict(dom), dict(maps)
            d2[t], d2[ti] = U, V
            m2[t] = m
            m2[ti] = {v: k for k, v in m.items()}
            yield from rec(i + 1, d2, m2)

    base_dom = {G.e: frozenset(pts)}
    base_maps = {G.e: {x: x for x in pts}}
    yield from rec(0, base_dom, base_maps)
