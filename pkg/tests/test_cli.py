"""Command-line interface: exit codes, output formats, end-to-end determinism."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

from taxoforge import (
    GivenRoot,
    dump_score_matrix,
    induce,
    load_report,
    load_score_matrix,
    load_taxonomy,
)
from taxoforge.cli import main

from helpers import make_matrix, make_tree


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """A small synthetic corpus written once for the whole session."""
    out = tmp_path_factory.mktemp("corpus") / "small"
    rc = main(
        [
            "make-synthetic",
            "--out",
            str(out),
            "--n-trees",
            "12",
            "--size-min",
            "8",
            "--size-max",
            "14",
            "--seed",
            "5",
            "--split-weights",
            "0.8,0.1,0.1",
        ]
    )
    assert rc == 0
    return out


def manifest(corpus_dir):
    return str(corpus_dir / "manifest.json")


class TestExitCodes:
    def test_usage_error_is_two(self):
        with pytest.raises(SystemExit) as e:
            main(["induce", "--no-such-flag"])
        assert e.value.code == 2

    def test_unknown_subcommand_is_two(self):
        with pytest.raises(SystemExit) as e:
            main(["frobnicate"])
        assert e.value.code == 2

    def test_validation_failure_is_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"tree_id": "t", "terms": ["a", "b"], "scores": [[0.5, 1.0], [1.0, null]]}')
        rc = main(["validate", "--scores", str(bad)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_file_is_one(self, tmp_path, capsys):
        rc = main(["validate", "--scores", str(tmp_path / "nope.json")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_success_is_zero(self, tmp_path, capsys):
        m = make_matrix(("a", "b"), {("a", "b"): 1.0})
        path = tmp_path / "ok.json"
        dump_score_matrix(m, path)
        rc = main(["validate", "--scores", str(path)])
        assert rc == 0
        assert "ok:" in capsys.readouterr().out

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "taxoforge", "--help"], capture_output=True, text=True
        )
        assert proc.returncode == 0
        assert "benchmark" in proc.stdout

    def test_subprocess_validation_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        proc = subprocess.run(
            [sys.executable, "-m", "taxoforge", "validate", "--scores", str(bad)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 1
        assert "error:" in proc.stderr

    def test_external_scorer_requires_matrices_dir(self, corpus_dir):
        with pytest.raises(SystemExit) as e:
            main(["benchmark", "--corpus", manifest(corpus_dir), "--scorer", "external"])
        assert e.value.code == 2


class TestInduce:
    def test_given_root_matches_library(self, tmp_path, capsys):
        m = make_matrix(
            ("a", "b", "c"),
            {("a", "b"): 2.0, ("a", "c"): 1.5, ("b", "c"): 3.0, ("c", "b"): 4.0},
            tree_id="demo",
        )
        path = tmp_path / "m.json"
        dump_score_matrix(m, path)
        rc = main(
            ["induce", "--scores", str(path), "--root-policy", "given", "--root", "a"]
        )
        assert rc == 0
        obj = json.loads(capsys.readouterr().out)
        want = induce(load_score_matrix(path), GivenRoot(0))
        assert obj["root"] == "a"
        assert sorted(tuple(e) for e in obj["edges"]) == sorted(
            (want.term(p), want.term(c)) for p, c in want.edges()
        )

    def test_best_root_two_nodes(self, tmp_path, capsys):
        m = make_matrix(("a", "b"), {("a", "b"): 5.0, ("b", "a"): 1.0})
        path = tmp_path / "m.json"
        dump_score_matrix(m, path)
        rc = main(["induce", "--scores", str(path), "--root-policy", "best"])
        assert rc == 0
        obj = json.loads(capsys.readouterr().out)
        assert obj["root"] == "a"
        assert obj["edges"] == [["a", "b"]]

    def test_given_requires_root(self, tmp_path, capsys):
        m = make_matrix(("a", "b"), {("a", "b"): 5.0})
        path = tmp_path / "m.json"
        dump_score_matrix(m, path)
        rc = main(["induce", "--scores", str(path), "--root-policy", "given"])
        assert rc == 1
        assert "missing root" in capsys.readouterr().err

    def test_out_writes_loadable_taxonomy(self, tmp_path):
        m = make_matrix(("a", "b"), {("a", "b"): 5.0, ("b", "a"): 1.0})
        src = tmp_path / "m.json"
        dump_score_matrix(m, src)
        dst = tmp_path / "tree.json"
        rc = main(
            ["induce", "--scores", str(src), "--root-policy", "best", "--out", str(dst)]
        )
        assert rc == 0
        tree = load_taxonomy(dst)
        assert tree.term(tree.root) == "a"


class TestEvaluate:
    def write_trees(self, path, trees):
        with open(path, "w", encoding="utf-8") as fh:
            for t in trees:
                fh.write(json.dumps(t.to_obj()) + "\n")

    def test_identity_prints_perfect_macro(self, tmp_path, capsys):
        trees = [
            make_tree(("a", "b", "c"), {("a", "b"), ("b", "c")}, tree_id="t1"),
            make_tree(("x", "y"), {("x", "y")}, tree_id="t2"),
        ]
        pred, gold = tmp_path / "pred.jsonl", tmp_path / "gold.jsonl"
        self.write_trees(pred, trees)
        self.write_trees(gold, trees)
        rc = main(["evaluate", "--pred", str(pred), "--gold", str(gold)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "macro P 1.000000 R 1.000000 F1 1.000000 (n_trees 2)" in out

    def test_report_file_and_harmonic_flag(self, tmp_path, capsys):
        chain = make_tree(("a", "b", "c"), {("a", "b"), ("b", "c")}, tree_id="t1")
        star = make_tree(("a", "b", "c"), {("a", "b"), ("a", "c")}, tree_id="t1")
        pred, gold = tmp_path / "pred.jsonl", tmp_path / "gold.jsonl"
        self.write_trees(pred, [chain])
        self.write_trees(gold, [star])
        report_path = tmp_path / "report.json"
        rc = main(
            [
                "evaluate",
                "--pred",
                str(pred),
                "--gold",
                str(gold),
                "--out",
                str(report_path),
                "--harmonic-f1",
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "macro P 0.666667 R 1.000000 F1 0.800000 (n_trees 1)" in out
        assert "harmonic-of-macro F1 0.800000" in out
        report = load_report(report_path)
        assert report.per_tree[0].f1 == 0.8

    def test_id_mismatch_rejected(self, tmp_path, capsys):
        pred, gold = tmp_path / "pred.jsonl", tmp_path / "gold.jsonl"
        self.write_trees(pred, [make_tree(("a", "b"), {("a", "b")}, tree_id="p")])
        self.write_trees(gold, [make_tree(("a", "b"), {("a", "b")}, tree_id="g")])
        rc = main(["evaluate", "--pred", str(pred), "--gold", str(gold)])
        assert rc == 1
        assert "tree id mismatch" in capsys.readouterr().err


class TestExportPairs:
    def test_closed_book_star_export(self, tmp_path, capsys):
        star = make_tree(("a", "b", "c"), {("a", "b"), ("a", "c")}, tree_id="star")
        # A corpus with just this tree: write it as a one-split dataset.
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        (corpus / "train.jsonl").write_text(json.dumps(star.to_obj()) + "\n")
        (corpus / "dev.jsonl").write_text("")
        (corpus / "test.jsonl").write_text("")
        (corpus / "manifest.json").write_text(
            json.dumps(
                {
                    "name": "tiny",
                    "language": "en",
                    "splits": {
                        "train": "train.jsonl",
                        "dev": "dev.jsonl",
                        "test": "test.jsonl",
                    },
                }
            )
        )
        out = tmp_path / "pairs.jsonl"
        rc = main(
            [
                "export-pairs",
                "--corpus",
                str(corpus / "manifest.json"),
                "--split",
                "train",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        assert "wrote 6 pairs (2 positive, 4 negative)" in capsys.readouterr().out
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(records) == 6
        assert all(r["parent_context"] == "" and r["child_context"] == "" for r in records)
        assert {(r["parent"], r["child"]) for r in records if r["label"] == 1} == {
            ("a", "b"),
            ("a", "c"),
        }

    def test_open_book_contexts_present(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "pairs.jsonl"
        rc = main(
            [
                "export-pairs",
                "--corpus",
                manifest(corpus_dir),
                "--split",
                "train",
                "--out",
                str(out),
                "--open-book",
            ]
        )
        assert rc == 0
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert any(r["child_context"] not in ("", f"{r['child']} .") for r in records)
        for r in records:
            assert r["hypothesis"].startswith("A ")

    def test_empty_split_rejected(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        for name in ("train", "dev", "test"):
            (corpus / f"{name}.jsonl").write_text("")
        (corpus / "manifest.json").write_text(
            json.dumps(
                {
                    "name": "empty",
                    "language": "en",
                    "splits": {
                        "train": "train.jsonl",
                        "dev": "dev.jsonl",
                        "test": "test.jsonl",
                    },
                }
            )
        )
        out = tmp_path / "pairs.jsonl"
        rc = main(
            [
                "export-pairs",
                "--corpus",
                str(corpus / "manifest.json"),
                "--split",
                "train",
                "--out",
                str(out),
            ]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestValidateCorpus:
    def test_corpus_ok_with_profile_warnings(self, corpus_dir, capsys):
        rc = main(["validate", "--corpus", manifest(corpus_dir)])
        assert rc == 0
        out = capsys.readouterr().out
        # 8-to-14-term trees sit below the size profile, so warnings appear.
        assert "warning:" in out
        assert "ok:" in out


class TestBenchmark:
    def test_oracle_perfect_f1(self, corpus_dir, capsys):
        rc = main(
            [
                "benchmark",
                "--corpus",
                manifest(corpus_dir),
                "--scorer",
                "oracle",
                "--eval-split",
                "train",
            ]
        )
        assert rc == 0
        assert "macro P 1.000000 R 1.000000 F1 1.000000" in capsys.readouterr().out

    def test_feature_scorer_determinism_across_jobs(self, corpus_dir, tmp_path, capsys):
        outs = []
        for jobs, tag in (("1", "a"), ("2", "b"), ("1", "c")):
            report = tmp_path / f"report_{tag}.json"
            rc = main(
                [
                    "benchmark",
                    "--corpus",
                    manifest(corpus_dir),
                    "--scorer",
                    "feature",
                    "--eval-split",
                    "train",
                    "--restarts",
                    "2",
                    "--seed",
                    "1",
                    "--jobs",
                    jobs,
                    "--out",
                    str(report),
                ]
            )
            assert rc == 0
            outs.append(report.read_bytes())
        assert outs[0] == outs[1] == outs[2]
        capsys.readouterr()

    def test_external_matrices_round_trip(self, corpus_dir, tmp_path, capsys):
        mdir = tmp_path / "matrices"
        rc = main(
            [
                "score",
                "--corpus",
                manifest(corpus_dir),
                "--split",
                "dev",
                "--scorer",
                "oracle",
                "--out-dir",
                str(mdir),
            ]
        )
        assert rc == 0
        rc = main(
            [
                "benchmark",
                "--corpus",
                manifest(corpus_dir),
                "--scorer",
                "external",
                "--matrices-dir",
                str(mdir),
                "--eval-split",
                "dev",
            ]
        )
        assert rc == 0
        assert "macro P 1.000000 R 1.000000 F1 1.000000" in capsys.readouterr().out

    def test_external_restarts_rejected(self, corpus_dir, tmp_path, capsys):
        rc = main(
            [
                "benchmark",
                "--corpus",
                manifest(corpus_dir),
                "--scorer",
                "external",
                "--matrices-dir",
                str(tmp_path),
                "--restarts",
                "3",
            ]
        )
        assert rc == 1
        assert "invalid restarts" in capsys.readouterr().err


class TestTrainScoreRank:
    def test_train_then_score_then_induce(self, corpus_dir, tmp_path, capsys):
        model_path = tmp_path / "model.json"
        rc = main(
            [
                "train",
                "--corpus",
                manifest(corpus_dir),
                "--split",
                "train",
                "--out",
                str(model_path),
                "--open-book",
                "--seed",
                "2",
            ]
        )
        assert rc == 0
        assert "final loss" in capsys.readouterr().out
        mdir = tmp_path / "matrices"
        rc = main(
            [
                "score",
                "--corpus",
                manifest(corpus_dir),
                "--split",
                "dev",
                "--model",
                str(model_path),
                "--open-book",
                "--out-dir",
                str(mdir),
            ]
        )
        assert rc == 0
        files = sorted(mdir.glob("*.json"))
        assert files
        matrix = load_score_matrix(files[0])
        assert matrix.n >= 8

    def test_rank_defs_output(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "ranked.jsonl"
        rc = main(
            [
                "rank-defs",
                "--corpus",
                manifest(corpus_dir),
                "--split",
                "train",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert records
        assert {"tree_id", "term", "rank", "source", "text", "relevance"} <= set(records[0])
        for r in records:
            assert isinstance(r["rank"], int)


class TestMakeSyntheticDeterminism:
    def test_identical_files_for_same_seed(self, tmp_path):
        args = [
            "make-synthetic",
            "--n-trees",
            "8",
            "--size-min",
            "8",
            "--size-max",
            "12",
            "--seed",
            "9",
        ]
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        for rel in (
            "train.jsonl",
            "dev.jsonl",
            "test.jsonl",
            "definitions.jsonl",
            "embeddings.txt",
            "stopwords.txt",
            "manifest.json",
        ):
            assert (a / rel).read_bytes() == (b / rel).read_bytes()
