"""Acceptance criteria 1-10, one test each.

Every test prints a single line "criterion N  PASS|FAIL  name  detail" to the
terminal (outside pytest's capture). Run this file directly to get the ten
lines without pytest's own output.
"""

import sys
import time

import numpy as np
import pytest

from conftest import p2, swap, triv
from oracles import block_data, envelope_gset, kernel_dim, naimark_rank
from partact.core import Report, make_cyclic
from partact.corpus import prep_corpus, system_corpus
from partact.dilation import cstar_p, dilate, envelope_of_cstar_p, psd_min_eigenvalue
from partact.fellbundle import envelope_bundles, is_saturated, make_triple, semidirect_bundle
from partact.kernels import ideal_I, kernel_algebra, orbit_span
from partact.morita import induced_spectrum_envelope, morita_envelope
from partact.paction import check_enveloping, commutative_enveloping, enveloping_iso, function_envelope
from partact.repcross import reduced_algebra, verify_hereditary_triple
from partact.suites import hausdorff_suite
from partact.takai import takai_iso

SEED = 2026
CORPUS_SIZE = 100
TOL = 1e-8


def announce(n, name, ok, detail=""):
    line = f"criterion {n:>2}  {'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip()
    capman = _capture_manager
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)


_capture_manager = None


@pytest.fixture(autouse=True)
def _grab_capture(request):
    global _capture_manager
    _capture_manager = request.config.pluginmanager.getplugin("capturemanager")
    yield


@pytest.fixture(scope="module")
def corpus():
    return system_corpus(SEED, CORPUS_SIZE, max_order=4, max_dim=6)


@pytest.fixture(scope="module")
def morita_run(corpus):
    start = time.perf_counter()
    envs = [morita_envelope(c.alpha) for c in corpus]
    return envs, time.perf_counter() - start


def failed(report: Report, names=None):
    return [c.name for c in report.checks if not c.ok and (names is None or c.name in names)]


# ---------------------------------------------------------------- 1


def test_criterion_01_p2_pipeline():
    start = time.perf_counter()
    alpha = p2()
    B = semidirect_bundle(alpha)
    red = reduced_algebra(B)
    w = commutative_enveloping(alpha)
    sigma = w.beta.maps[1].sigma
    moved = sorted(b for b in w.B.labels if sigma[b] != b)
    fixed = [b for b in w.B.labels if sigma[b] == b]
    env_crossed = reduced_algebra(semidirect_bundle(w.beta))
    ka = kernel_algebra(B, 1e-9)
    I = ideal_I(B, ka.layout)
    span = orbit_span(B, I)
    elapsed = time.perf_counter() - start
    got = {
        "crossed": (red.dim, sorted(red.blocks())),
        "envelope": (w.B.sizes, len(moved), fixed == [w.embed.sigma["b1"]]),
        "B x G": env_crossed.dim,
        "kernels": (ka.dim, sorted(ka.blocks)),
        "dim I": I.dim,
        "orbit span": span.dim,
    }
    want = {
        "crossed": (3, [1, 1, 1]),
        "envelope": ((1, 1, 1), 2, True),
        "B x G": 6,
        "kernels": (6, [1, 1, 2]),
        "dim I": 5,
        "orbit span": 6,
    }
    ok = got == want and elapsed < 1.0 and red.report.ok and ka.report.ok and check_enveloping(alpha, w).ok
    announce(1, "SYS-P2 pipeline", ok, f"{elapsed:.2f}s")
    assert got == want
    assert elapsed < 1.0


# ---------------------------------------------------------------- 2


def test_criterion_02_hausdorff_iff_closed_graph():
    start = time.perf_counter()
    res = hausdorff_suite(3)
    elapsed = time.perf_counter() - start
    from partact.corpus import load
    from partact.finspace import enveloping_space, graph_closed, is_hausdorff
    sier, _ = load("sys-sier")
    sier_ok = not is_hausdorff(enveloping_space(sier).space) and not graph_closed(sier)
    ok = res.ok and sier_ok and elapsed < 10
    announce(2, "Hausdorff iff closed graph", ok, f"{res.count} cases, {len(res.failures)} exceptions, {elapsed:.2f}s")
    assert res.ok, res.failures[:3]
    assert sier_ok and elapsed < 10


# ---------------------------------------------------------------- 3


def test_criterion_03_envelope_uniqueness():
    worst, bad = 0.0, []
    for c in system_corpus(SEED, 200, max_order=4, max_blocks=5, commutative=True):
        a = c.alpha
        w1 = commutative_enveloping(a)
        w2, _ = function_envelope(a)
        rep = enveloping_iso(a, w1, w2).report
        worst = max(worst, rep.max_residual())
        if not (rep.ok and check_enveloping(a, w1).ok and check_enveloping(a, w2).ok):
            bad.append(c.name)
    ok = not bad and worst <= TOL
    announce(3, "envelope uniqueness", ok, f"200 systems, max residual {worst:.1e}")
    assert not bad and worst <= TOL


# ---------------------------------------------------------------- 4

MORITA_CHECKS = (
    "gamma: gamma_t preserves the ternary product",
    "gamma^r isomorphic to alpha",
    "gamma^l = natural action on I",
    "span of the orbit of I = k(B)",
)


def test_criterion_04_morita_envelope(corpus, morita_run):
    envs, elapsed = morita_run
    bad, worst = [], 0.0
    for c, env in zip(corpus, envs):
        names = {ch.name for ch in env.report.checks}
        missing = [n for n in MORITA_CHECKS if n not in names]
        worst = max(worst, env.report.max_residual())
        if missing or not env.report.ok:
            bad.append((c.name, missing + failed(env.report)))
    ok = not bad and worst <= TOL and elapsed < 60
    announce(4, "Morita enveloping action", ok, f"{len(corpus)} systems, max residual {worst:.1e}, {elapsed:.1f}s")
    assert not bad, bad[:3]
    assert worst <= TOL and elapsed < 60


# ---------------------------------------------------------------- 5


def test_criterion_05_takai(corpus):
    bad, worst = [], 0.0
    named = [("SYS-TRIV", triv()), ("SYS-P2", p2()), ("SYS-SWAP", swap())] + [(c.name, c.alpha) for c in corpus]
    for name, a in named:
        iso = takai_iso(semidirect_bundle(a), np.random.default_rng(SEED))
        worst = max(worst, iso.sigma_defect, iso.equivariance_defect)
        if not iso.report.ok or iso.crossed.dim != iso.kernels.dim:
            bad.append(name)
    ok = not bad and worst <= TOL
    announce(5, "Takai isomorphism", ok, f"{len(named)} systems, max defect {worst:.1e}")
    assert not bad and worst <= TOL


# ---------------------------------------------------------------- 6


def test_criterion_06_saturation(corpus):
    bad, n_sat = [], 0
    for c in corpus:
        B = semidirect_bundle(c.alpha)
        ka = kernel_algebra(B)
        s = is_saturated(B)
        n_sat += s
        if s != (ideal_I(B, ka.layout).dim == ka.dim):
            bad.append(c.name)
    announce(6, "saturation iff dim I = dim k", not bad, f"{len(corpus)} systems, {n_sat} saturated")
    assert not bad


# ---------------------------------------------------------------- 7


def test_criterion_07_hereditary_triple(corpus):
    bad, count = [], 0
    for c in corpus:
        a = c.alpha
        if not a.is_commutative():
            continue
        count += 1
        tr = make_triple(*envelope_bundles(a, commutative_enveloping(a)))
        if not tr.report.ok:
            bad.append((c.name, failed(tr.report)))
            continue
        mw = verify_hereditary_triple(tr)
        if not (mw.report.ok and tr.full):
            bad.append((c.name, failed(mw.report)))
    ok = not bad and count > 0
    announce(7, "hereditary triple", ok, f"{count} commutative systems")
    assert count > 0 and not bad, bad[:3]


# ---------------------------------------------------------------- 8


def test_criterion_08_dilation():
    bad, worst, min_eig = [], 0.0, np.inf
    for i, u in enumerate(prep_corpus(SEED, 200, orders=(2, 3, 4), max_dim=4)):
        d = dilate(u)
        worst = max(worst, d.report.max_residual())
        min_eig = min(min_eig, psd_min_eigenvalue(u))
        if not d.report.ok or d.dim != naimark_rank(u):
            bad.append(i)
    Z2 = make_cyclic(2)
    c = cstar_p(Z2)
    env = envelope_of_cstar_p(Z2)
    fixture = (c.crossed.dim, env.crossed.dim, sorted(env.crossed.blocks())) == (3, 6, [1, 1, 2])
    ok = not bad and worst <= TOL and min_eig >= -TOL and fixture and env.report.ok
    announce(8, "dilation", ok, f"200 reps, max residual {worst:.1e}, min eigenvalue {min_eig:.1e}")
    assert not bad and worst <= TOL and min_eig >= -TOL
    assert fixture and env.report.ok


# ---------------------------------------------------------------- 9


def test_criterion_09_kernel_dimensions(corpus):
    bad = []
    for c in corpus:
        B = semidirect_bundle(c.alpha)
        d = kernel_algebra(B).dim
        if not d == c.alpha.G.order * B.total_dim() == kernel_dim(c.alpha):
            bad.append(c.name)
    announce(9, "dim k = |G| sum dim B_t", not bad, f"{len(corpus)} bundles")
    assert not bad


# ---------------------------------------------------------------- 10


def test_criterion_10_induced_spectrum(corpus):
    bad = []
    for c in corpus:
        iso = induced_spectrum_envelope(c.alpha)
        if not iso.report.ok:
            bad.append(c.name)
        elif c.alpha.is_commutative() and len(iso.mapping) != len(envelope_gset(*block_data(c.alpha))[0]):
            bad.append(c.name)
    announce(10, "induced spectrum", not bad, f"{len(corpus)} systems")
    assert not bad


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
