"""Independent reference computations used to confirm library outputs.

None of these import the constructions they check. Each one works from the
combinatorial data alone: block labels, domains and block permutations for
algebra systems; points, opens and maps for spaces.
"""

from itertools import combinations

import numpy as np


class UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        self.parent[self.find(a)] = self.find(b)

    def classes(self):
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return list(out.values())


def block_data(alpha):
    """(G, labels, domains, maps) of an algebra system with the unitaries forgotten."""
    G = alpha.G
    return G, list(alpha.A.labels), [set(alpha.domains[t]) for t in G], [dict(alpha.maps[t].sigma) for t in G]


def envelope_gset(G, points, domains, maps):
    """Globalization of a partial action on a finite set: (G x X)/~ with the
    left translation action. Returns (classes, act) with act(t, i) -> j."""
    pairs = [(t, x) for t in G for x in points]
    uf = UnionFind(pairs)
    for r in G:
        for x in points:
            for s in G:
                u = G.mul(G.inv(s), r)
                # (r, x) ~ (s, alpha_{s^-1 r}(x)) when x lies in X_{r^-1 s}
                if x in domains[G.inv(u)]:
                    uf.union((r, x), (s, maps[u][x]))
    classes = uf.classes()
    index = {p: i for i, c in enumerate(classes) for p in c}

    def act(t, i):
        r, x = classes[i][0]
        return index[(G.mul(t, r), x)]

    return classes, act


def groupoid_blocks(G, points, domains, maps):
    """Wedderburn block sizes of the crossed product of a commutative partial
    action, read off its transformation groupoid: an orbit O whose isotropy
    group H is abelian contributes |H| blocks of size |O|."""
    uf = UnionFind(points)
    for t in G:
        for x in domains[G.inv(t)]:
            uf.union(x, maps[t][x])
    out = []
    for orbit in uf.classes():
        x = orbit[0]
        iso = [t for t in G if x in domains[G.inv(t)] and maps[t][x] == x]
        out += [len(orbit)] * len(iso)
    return sorted(out)


def kernel_blocks(G, points, domains, maps):
    """Block sizes of the kernel algebra of a commutative system. Blocks are
    indexed by points y of the enveloping set, and the block at y acts on
    l2 of {t : t^-1 y lies in the copy of X}."""
    classes, act = envelope_gset(G, points, domains, maps)
    index = {p: i for i, c in enumerate(classes) for p in c}
    inside = {index[(G.e, x)] for x in points}
    return sorted(sum(act(G.inv(t), y) in inside for t in G) for y in range(len(classes)))


def crossed_dim(alpha):
    return sum(sum(alpha.A.size(b) ** 2 for b in alpha.domains[t]) for t in alpha.G)


def ideal_dim(alpha):
    """dim I = sum over (r, s) of dim(D_r & D_{r s^-1}): B_r B_s* is that ideal in the fiber r s^-1."""
    G, A = alpha.G, alpha.A
    total = 0
    for r in G:
        for s in G:
            common = set(alpha.domains[r]) & set(alpha.domains[G.mul(r, G.inv(s))])
            total += sum(A.size(b) ** 2 for b in common)
    return total


def kernel_dim(alpha):
    return alpha.G.order * crossed_dim(alpha)


def graph_closed_by_closures(alpha):
    """In a finite space the closure of a set is the union of point closures,
    and cl{(x, y)} = cl{x} x cl{y} in the product."""
    X = alpha.X
    cl = {x: {a for a in X.points if all(x in U for U in X.opens if a in U)} for x in X.points}
    for t in alpha.G:
        graph = {(x, alpha.maps[t][x]) for x in alpha.domains[alpha.G.inv(t)]}
        closure = {(a, b) for x, y in graph for a in cl[x] for b in cl[y]}
        if closure != graph:
            return False
    return True


def quotient_is_hausdorff(alpha):
    """Build the enveloping space by union-find and brute-force quotient
    topology, then test pairwise separation."""
    G, X = alpha.G, alpha.X
    pts = list(X.points)
    classes, _ = envelope_gset(G, pts, [set(alpha.domains[t]) for t in G], [dict(alpha.maps[t]) for t in G])
    label = {p: i for i, c in enumerate(classes) for p in c}
    n = len(classes)
    opens = []
    for k in range(n + 1):
        for S in combinations(range(n), k):
            S = set(S)
            if all(frozenset(x for x in pts if label[(t, x)] in S) in X.opens for t in G):
                opens.append(S)
    return all(any(i in U and j in V and not U & V for U in opens for V in opens)
               for i, j in combinations(range(n), 2))


def naimark_rank(u, tol=1e-9):
    """Dimension of the minimal unitary dilation of the positive definite
    function t -> u_t: the rank of the block matrix [u_{s^-1 t}]."""
    G = u.G
    M = np.block([[u.u[G.mul(G.inv(s), t)] for t in G] for s in G])
    return int(np.linalg.matrix_rank(M, tol))
