"""Randomized and exhaustive property suites over seeded corpora.

Each suite returns a SuiteResult: how many cases ran, which failed (by name,
with the failing check names as witnesses) and the worst residual seen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import Report, make_cyclic
from .corpus import CorpusSystem, prep_corpus, system_corpus
from .dilation import dilate
from .fellbundle import envelope_bundles, is_saturated, make_triple, semidirect_bundle
from .finspace import all_partial_actions, enveloping_space, graph_closed, is_hausdorff, spaces_on
from .kernels import ideal_I, kernel_algebra
from .morita import induced_spectrum_envelope, morita_envelope
from .paction import check_enveloping, commutative_enveloping, enveloping_iso, function_envelope
from .repcross import verify_hereditary_triple
from .takai import takai_iso


@dataclass
class SuiteResult:
    name: str
    count: int = 0
    failures: list[dict] = field(default_factory=list)
    max_residual: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def record(self, case: str, report: Report) -> None:
        self.count += 1
        self.max_residual = max(self.max_residual, report.max_residual())
        if not report.ok:
            self.failures.append({"case": case, "failed": [c.name for c in report.failures]})

    def to_dict(self) -> dict:
        return {"count": self.count, "failures": self.failures, "max_residual": self.max_residual, "ok": self.ok}


def hausdorff_suite(max_points: int = 3) -> SuiteResult:
    """is_hausdorff(envelope) <=> closed graph, for every partial action of Z2 on <= max_points points."""
    G = make_cyclic(2)
    out = SuiteResult("hausdorff")
    for k in range(1, max_points + 1):
        pts = tuple(str(i) for i in range(k))
        for X in spaces_on(pts):
            for i, alpha in enumerate(all_partial_actions(G, X)):
                rep = Report()
                h, gc = is_hausdorff(enveloping_space(alpha).space), graph_closed(alpha)
                rep.add("hausdorff iff graph closed", h == gc, detail={"hausdorff": h, "graph_closed": gc})
                out.record(f"{k}pt:{sorted(map(sorted, X.opens))}:{i}", rep)
    return out


def uniqueness_suite(seed: int, count: int, max_order: int = 4) -> SuiteResult:
    """Two independently built envelopes of a commutative system are isomorphic."""
    out = SuiteResult("uniqueness")
    for c in system_corpus(seed, count, max_order=max_order, commutative=True):
        a = c.alpha
        w1 = commutative_enveloping(a)
        w2, _ = function_envelope(a)
        rep = Report()
        rep.extend(check_enveloping(a, w1), prefix="orbit witness: ")
        rep.extend(check_enveloping(a, w2), prefix="function witness: ")
        rep.extend(enveloping_iso(a, w1, w2).report, prefix="iso: ")
        out.record(c.name, rep)
    return out


def system_suites(corpus: list[CorpusSystem]) -> list[SuiteResult]:
    """Morita envelope, Takai, saturation, kernel dimensions and induced spectrum on each system."""
    morita, takai, sat, kdim, spectrum, triple = (SuiteResult(n) for n in
                                              ("morita", "takai", "saturation", "kernel_dims", "spectrum", "triple"))
    for c in corpus:
        a = c.alpha
        morita.record(c.name, morita_envelope(a).report)
        B = semidirect_bundle(a)
        takai.record(c.name, takai_iso(B).report)
        ka = kernel_algebra(B)
        dI = ideal_I(B, ka.layout).dim
        rep = Report()
        s = is_saturated(B)
        rep.add("saturated iff dim I = dim k", s == (dI == ka.dim), detail={"saturated": s, "dim_I": dI, "dim_k": ka.dim})
        sat.record(c.name, rep)
        rep = Report()
        rep.add("dim k = |G| sum dim B_t", ka.dim == a.G.order * B.total_dim())
        kdim.record(c.name, rep)
        spectrum.record(c.name, induced_spectrum_envelope(a).report)
        if a.is_commutative():
            A, E, BB = envelope_bundles(a, commutative_enveloping(a))
            tr = make_triple(A, E, BB)
            rep = Report()
            rep.extend(tr.report, prefix="containment: ")
            if tr.report.ok:
                rep.extend(verify_hereditary_triple(tr).report)
            triple.record(c.name, rep)
    return [morita, takai, sat, kdim, spectrum, triple]


def dilation_suite(seed: int, count: int, orders=(2, 3, 4), max_dim: int = 4) -> SuiteResult:
    out = SuiteResult("dilation")
    for i, u in enumerate(prep_corpus(seed, count, orders, max_dim)):
        out.record(f"prep-{seed}-{i}", dilate(u).report)
    return out


def run_all(seed: int, count: int = 20, max_order: int = 4) -> list[SuiteResult]:
    orders = tuple(n for n in (2, 3, 4) if n <= max_order) or (2,)
    results = [hausdorff_suite(), uniqueness_suite(seed, count, max_order)]
    results += system_suites(system_corpus(seed, count, max_order=max_order))
    results.append(dilation_suite(seed, count, orders))
    return results
