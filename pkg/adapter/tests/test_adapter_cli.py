"""Command-line behavior and file-level interoperability with the toolkit."""

from __future__ import annotations

import json

import pytest
import torch

from taxoforge_adapter import AdapterConfig, AdapterError, finetune, load_bundle, score_tree

FAST = dict(epochs=150, lr=3e-3, seed=0)
FAST_FLAGS = ("--epochs", "150", "--lr", "3e-3", "--seed", "0")


def test_usage_errors_exit_2(adapter):
    assert adapter(check=False).returncode == 2
    assert adapter("transmogrify", check=False).returncode == 2
    assert adapter("finetune", "--out", "x.pt", check=False).returncode == 2
    assert adapter("finetune", "--pairs", "p", "--out", "m", "--mode", "telepathic",
                   check=False).returncode == 2


def test_missing_pairs_file_exits_1(adapter, tmp_path):
    proc = adapter("finetune", "--pairs", tmp_path / "nope.jsonl",
                   "--out", tmp_path / "m.pt", check=False)
    assert proc.returncode == 1
    assert proc.stderr.startswith("error:")


def test_single_class_labels_exit_1(adapter, chain_export, tmp_path):
    path = chain_export(labels=[0, 0, 0, 0, 0, 0])
    proc = adapter("finetune", "--pairs", path, "--out", tmp_path / "m.pt", check=False)
    assert proc.returncode == 1
    assert "single-class labels" in proc.stderr


def test_template_mismatch_exits_1(adapter, chain_export, tmp_path):
    proc = adapter(
        "finetune", "--pairs", chain_export(), "--out", tmp_path / "m.pt",
        "--template", "{parent} covers {child}", check=False,
    )
    assert proc.returncode == 1
    assert "hypothesis template mismatch" in proc.stderr


def test_closed_book_round_trip(adapter, primary, chain_export, chain_trees, tmp_path):
    model = tmp_path / "chain.pt"
    proc = adapter("finetune", "--pairs", chain_export(), "--out", model, *FAST_FLAGS)
    assert "train accuracy 1.0000" in proc.stdout
    assert f"saved model to {model}" in proc.stdout

    out_dir = tmp_path / "matrices"
    proc = adapter("emit", "--model", model, "--trees", chain_trees, "--out-dir", out_dir)
    assert f"wrote 1 score matrices to {out_dir}" in proc.stdout
    matrix_path = out_dir / "t.json"
    assert matrix_path.exists()

    primary("validate", "--scores", matrix_path)
    induced = tmp_path / "induced.jsonl"
    primary("induce", "--scores", matrix_path, "--root-policy", "given",
            "--root", "a", "--out", induced)
    predicted = json.loads(induced.read_text(encoding="utf-8"))
    assert sorted(map(tuple, predicted["edges"])) == [("a", "b"), ("b", "c")]


def test_emitted_scores_are_direction_sensitive(adapter, chain_export, chain_trees, tmp_path):
    model = tmp_path / "chain.pt"
    adapter("finetune", "--pairs", chain_export(), "--out", model, *FAST_FLAGS)
    out_dir = tmp_path / "matrices"
    adapter("emit", "--model", model, "--trees", chain_trees, "--out-dir", out_dir)
    scores = json.loads((out_dir / "t.json").read_text(encoding="utf-8"))["scores"]
    n = len(scores)
    assert any(
        scores[i][j] != scores[j][i] for i in range(n) for j in range(i + 1, n)
    )


def test_same_seed_reruns_are_byte_identical(adapter, chain_export, chain_trees, tmp_path):
    pairs = chain_export()
    outputs = []
    for tag in ("one", "two"):
        model = tmp_path / f"{tag}.pt"
        adapter("finetune", "--pairs", pairs, "--out", model, *FAST_FLAGS)
        out_dir = tmp_path / tag
        adapter("emit", "--model", model, "--trees", chain_trees, "--out-dir", out_dir)
        outputs.append((out_dir / "t.json").read_bytes())
    assert outputs[0] == outputs[1]


def test_open_book_round_trip(adapter, primary, chain_export, chain_trees, tmp_path):
    contexts = {"a": "a the top thing .", "b": "b a kind of a .", "c": "c a kind of b ."}
    pairs = chain_export(contexts=contexts)
    model = tmp_path / "open.pt"
    proc = adapter("finetune", "--pairs", pairs, "--out", model,
                   "--mode", "open-book", *FAST_FLAGS)
    assert "train accuracy 1.0000" in proc.stdout
    out_dir = tmp_path / "matrices"
    adapter("emit", "--model", model, "--trees", chain_trees, "--out-dir", out_dir)
    primary("validate", "--scores", out_dir / "t.json")


def test_emit_handles_terms_missing_from_export(adapter, primary, chain_export, tmp_path):
    model = tmp_path / "chain.pt"
    adapter("finetune", "--pairs", chain_export(), "--out", model, *FAST_FLAGS)
    trees = tmp_path / "ghost.jsonl"
    trees.write_text(
        json.dumps({"id": "g", "terms": ["a", "ghost"], "root": "a",
                    "edges": [["a", "ghost"]]}) + "\n",
        encoding="utf-8",
    )
    out_dir = tmp_path / "matrices"
    adapter("emit", "--model", model, "--trees", trees, "--out-dir", out_dir)
    primary("validate", "--scores", out_dir / "g.json")


def test_single_term_tree_gets_null_matrix(adapter, primary, chain_export, tmp_path):
    model = tmp_path / "chain.pt"
    adapter("finetune", "--pairs", chain_export(), "--out", model,
            "--epochs", "1", "--seed", "0")
    trees = tmp_path / "solo.jsonl"
    trees.write_text(
        json.dumps({"id": "solo", "terms": ["x"], "root": "x", "edges": []}) + "\n",
        encoding="utf-8",
    )
    out_dir = tmp_path / "matrices"
    adapter("emit", "--model", model, "--trees", trees, "--out-dir", out_dir)
    obj = json.loads((out_dir / "solo.json").read_text(encoding="utf-8"))
    assert obj["scores"] == [[None]]
    primary("validate", "--scores", out_dir / "solo.json")


def test_emit_rejects_foreign_model_files(adapter, tmp_path, chain_trees):
    bogus = tmp_path / "bogus.pt"
    bogus.write_bytes(b"not a model")
    proc = adapter("emit", "--model", bogus, "--trees", chain_trees,
                   "--out-dir", tmp_path / "m", check=False)
    assert proc.returncode == 1
    assert "error:" in proc.stderr

    wrong_format = tmp_path / "wrong.pt"
    torch.save({"format": "something-else"}, wrong_format)
    proc = adapter("emit", "--model", wrong_format, "--trees", chain_trees,
                   "--out-dir", tmp_path / "m", check=False)
    assert "unknown model format" in proc.stderr

    future = tmp_path / "future.pt"
    torch.save({"format": "taxoforge-adapter-model", "version": 99}, future)
    proc = adapter("emit", "--model", future, "--trees", chain_trees,
                   "--out-dir", tmp_path / "m", check=False)
    assert "unsupported model version" in proc.stderr


def test_truncation_collisions_are_reported(chain_export, tmp_path):
    config = AdapterConfig(
        pairs_path=str(chain_export()),
        model_path=str(tmp_path / "narrow.pt"),
        max_len=8,
        epochs=1,
        seed=0,
    )
    finetune(config, log=lambda *_: None)
    bundle = load_bundle(config.model_path)
    with pytest.raises(AdapterError, match="direction-insensitive inputs"):
        score_tree(bundle, ["x q q q q q", "x q q q q r"])


def test_term_without_tokens_is_reported(chain_export, tmp_path):
    config = AdapterConfig(
        pairs_path=str(chain_export()),
        model_path=str(tmp_path / "m.pt"),
        epochs=1,
        seed=0,
    )
    finetune(config, log=lambda *_: None)
    bundle = load_bundle(config.model_path)
    with pytest.raises(AdapterError, match="term encoding failure"):
        score_tree(bundle, ["fine", "..."])
