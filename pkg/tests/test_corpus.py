import json

import numpy as np
import pytest

from oracles import block_data, envelope_gset
from partact.corpus import BUILTINS, load, prep_corpus, read_document, system_corpus
from partact.dilation import validate_prep
from partact.paction import check_enveloping, validate_alg


@pytest.mark.parametrize("name", BUILTINS)
def test_builtins_load(name):
    obj, doc = load(name)
    assert doc["kind"] in {"alg", "top", "prep"}
    assert read_document(name) == doc


def test_missing_example_path_falls_back_to_builtin():
    _, doc = load("examples/sys-p2.json")
    assert doc == read_document("sys-p2")


def test_corpus_is_deterministic():
    a = [c.alpha.to_json() for c in system_corpus(7, 5)]
    b = [c.alpha.to_json() for c in system_corpus(7, 5)]
    assert json.dumps(a, sort_keys=True, default=str) == json.dumps(b, sort_keys=True, default=str)


def test_corpus_respects_bounds():
    for c in system_corpus(3, 20, max_order=4, max_dim=6):
        assert c.alpha.G.order <= 4 and c.alpha.A.dim <= 6
        assert validate_alg(c.alpha).ok and check_enveloping(c.alpha, c.witness).ok


def test_commutative_corpus_envelopes_match_the_globalized_set():
    for c in system_corpus(2, 10, commutative=True):
        assert c.alpha.is_commutative()
        assert len(c.witness.B.labels) == len(envelope_gset(*block_data(c.alpha))[0])


def test_prep_corpus():
    preps = prep_corpus(4, 10, orders=(2, 3), max_dim=3)
    assert all(u.G.order in (2, 3) and u.dim <= 3 and validate_prep(u).ok for u in preps)


def test_malformed_json_reports_the_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n "kind": "alg",\n "group": [\n}\n')
    with pytest.raises(ValueError, match="line 4"):
        load(str(p))


def test_missing_key_reports_its_line(tmp_path):
    doc = read_document("sys-p2")
    del doc["alpha"]
    p = tmp_path / "noalpha.json"
    p.write_text(json.dumps(doc, indent=1, sort_keys=True))
    with pytest.raises(ValueError, match=r"line \d+: schema error"):
        load(str(p))


def test_unknown_kind(tmp_path):
    p = tmp_path / "k.json"
    p.write_text('{\n  "kind": "sheaf"\n}\n')
    with pytest.raises(ValueError, match="line 2"):
        load(str(p))


def test_top_level_must_be_an_object(tmp_path):
    p = tmp_path / "list.json"
    p.write_text("[1, 2]")
    with pytest.raises(ValueError, match="top level"):
        load(str(p))
