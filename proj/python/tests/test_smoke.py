import json
import math

import pytest

import dpp


def test_bleu_hand_values():
    ref = "the cat is on the mat".split()
    assert dpp.bleu("the cat sat on the mat".split(), ref) == pytest.approx(2 ** -1.25, abs=1e-12)
    assert dpp.bleu(ref, ref) == pytest.approx(1.0)
    assert dpp.bleu(["dog"], ref) == 0.0


def test_wmd_single_words_is_euclidean():
    vecs = {"x": [0.0, 0.0], "y": [3.0, 4.0]}
    assert dpp.wmd(["x"], ["y"], vecs) == pytest.approx(5.0)
    assert dpp.wmd(["x", "y"], ["y", "x"], vecs) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        dpp.wmd(["x"], ["y"], {"x": [0.0], "y": [1.0, 2.0]})


def test_grammar_and_executor():
    pairs = dpp.grammar_pairs()
    assert len(pairs) == 202
    assert len({c for c, _ in pairs}) == 202
    assert dpp.execute("(count (filter (type player) (= plays_for lakers)))") == "4"
    with pytest.raises(ValueError):
        dpp.execute("(count (type")


def test_config_defaults_and_errors(tmp_path):
    cfg = dict(dpp.load_config())
    assert cfg["model.K"] == "6"
    assert cfg["train.lambda"] == "4"
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nK = 0\n")
    with pytest.raises(dpp.ConfigError, match="K"):
        dpp.load_config(str(bad))


def test_cli_gen_data(tmp_path):
    code, out, err = dpp.run_cli(["gen-data", "--seed", "3", "--out", str(tmp_path / "run")])
    assert code == 0, err
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["seed"] == 3
    assert (tmp_path / "run" / "data" / "natural.jsonl").exists()


def test_cli_exit_codes(tmp_path):
    assert dpp.run_cli(["no-such-command"])[0] == 1
    code, _, err = dpp.run_cli(["eval", "--out", str(tmp_path / "r"), "--checkpoint", str(tmp_path / "none")])
    assert code == 1
    assert "meta.txt" in err
