import json
import os
import subprocess
import sys

import pytest

from partact.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, canonical, dumps, main


def run(capsys, *argv):
    code = main([*argv, "--json"])
    return code, json.loads(capsys.readouterr().out)


def test_crossed_p2(capsys):
    code, doc = run(capsys, "crossed", "sys-p2")
    assert code == EXIT_OK and doc["ok"]
    r = doc["result"]
    assert r["dim"] == 3 and sorted(r["blocks"]) == [1, 1, 1]
    assert r["generators"] == ["e:0", "e:1", "g:0"]


def test_kernels_p2(capsys):
    code, doc = run(capsys, "kernels", "sys-p2")
    assert code == EXIT_OK
    assert doc["result"] == {"blocks": [1, 1, 2], "dim": 6, "dim_I": 5, "orbit_span_dim": 6, "saturated": False}


def test_envelope_p2(capsys):
    code, doc = run(capsys, "envelope", "sys-p2")
    assert code == EXIT_OK
    r = doc["result"]
    assert (r["dim_k"], r["dim_I"], sorted(r["blocks_k"])) == (6, 5, [1, 1, 2])
    assert all(v["ok"] for v in r["gamma_checks"].values())


def test_envelope_sier_is_not_hausdorff(capsys):
    code, doc = run(capsys, "envelope", "sys-sier")
    assert code == EXIT_OK
    assert doc["result"]["hausdorff"] is False and doc["result"]["graph_closed"] is False


def test_takai_triv(capsys):
    code, doc = run(capsys, "takai-check", "sys-triv")
    assert code == EXIT_OK
    assert doc["result"]["dims"] == [4, 4]
    assert doc["result"]["sigma_defect"] < 1e-8


def test_dilate_prep_z2(capsys):
    code, doc = run(capsys, "dilate", "prep-z2")
    assert code == EXIT_OK
    r = doc["result"]
    assert r["dim_H_tilde"] == 3 and r["psd_min_eigenvalue"] >= -1e-8
    assert all(v <= 1e-8 for v in r["residuals"].values())


def test_dilate_respects_max_group_order(capsys):
    code, doc = run(capsys, "dilate", "prep-z2", "--max-group-order", "1")
    assert code == EXIT_INPUT and "max-group-order" in doc["error"]


@pytest.mark.parametrize("name", ["sys-triv", "sys-p2", "sys-swap", "sys-sier", "prep-z2"])
def test_validate_builtins(capsys, name):
    code, doc = run(capsys, "validate", name)
    assert code == EXIT_OK and doc["ok"]


@pytest.mark.parametrize("name", ["sys-triv", "sys-p2", "sys-swap"])
def test_spectrum_builtins(capsys, name):
    code, _ = run(capsys, "spectrum", name)
    assert code == EXIT_OK


def test_failing_check_exits_one(tmp_path, capsys):
    from partact.corpus import read_document
    doc = read_document("prep-z2")
    # u_g = E_12 is not self-adjoint, so u_g^-1 = u_g* fails
    doc["u"]["g"] = [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]
    p = tmp_path / "bad-prep.json"
    p.write_text(json.dumps(doc))
    code, out = run(capsys, "validate", str(p))
    assert code == EXIT_FAIL and not out["ok"]


def test_parse_error_exits_two_with_line(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{\n "kind": "alg",\n oops\n}')
    code, doc = run(capsys, "crossed", str(p))
    assert code == EXIT_INPUT and "line 3" in doc["error"]


def test_missing_file_exits_two(capsys):
    code, doc = run(capsys, "crossed", "/nonexistent/system.json")
    assert code == EXIT_INPUT


def test_wrong_kind_exits_two(capsys):
    code, doc = run(capsys, "dilate", "sys-p2")
    assert code == EXIT_INPUT


def test_examples_path_resolves_to_builtin(capsys):
    assert run(capsys, "crossed", "examples/sys-p2.json") == run(capsys, "crossed", "sys-p2")


def test_output_is_byte_identical(capsys):
    main(["kernels", "sys-swap", "--json"])
    first = capsys.readouterr().out
    main(["kernels", "sys-swap", "--json"])
    assert capsys.readouterr().out == first


def test_human_output_lists_checks(capsys):
    assert main(["crossed", "sys-p2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("crossed: ok") and "[pass]" in out


def test_canonical_floats():
    assert canonical(1 / 3) == 0.333333333333
    assert canonical(-0.0) == 0.0
    assert canonical(float("nan")) == "nan"
    assert canonical(1 + 2j) == [1.0, 2.0]
    assert dumps({"b": 1, "a": {2, 1}}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}'


def test_tol_flag_and_environment(monkeypatch, capsys):
    monkeypatch.setenv("PARTACT_TOL", "1e-7")
    code, _ = run(capsys, "crossed", "sys-p2", "--tol", "1e-10")
    assert code == EXIT_OK
    assert os.environ["PARTACT_TOL"] == "1e-7"
    monkeypatch.delenv("PARTACT_TOL")
    run(capsys, "crossed", "sys-p2", "--tol", "1e-10")
    assert "PARTACT_TOL" not in os.environ


def test_corpus_small(capsys):
    code, doc = run(capsys, "corpus", "--count", "2", "--seed", "5")
    assert code == EXIT_OK
    assert set(doc["result"]["suites"]) == {"hausdorff", "uniqueness", "morita", "takai", "saturation",
                                             "kernel_dims", "spectrum", "triple", "dilation"}


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "partact", "kernels", "sys-p2", "--json"],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0 and json.loads(out.stdout)["result"]["dim_I"] == 5
