"""Fixtures for the adapter suite.

The toolkit is exercised strictly through its command line: fixtures
shell out to ``taxoforge`` for corpus generation and pair export, and
the tests feed emitted matrices back the same way. Nothing here imports
the toolkit's Python API.
"""

from __future__ import annotations

import json
import subprocess
import sys
from types import SimpleNamespace

import pytest


def _run(module: str, *args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", module, *map(str, args)],
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="session")
def primary():
    """Runner for the taxonomy toolkit CLI."""

    def run(*args, check: bool = True) -> subprocess.CompletedProcess:
        proc = _run("taxoforge", *args)
        if check:
            assert proc.returncode == 0, proc.stderr
        return proc

    return run


@pytest.fixture(scope="session")
def adapter():
    """Runner for this package's CLI."""

    def run(*args, check: bool = True) -> subprocess.CompletedProcess:
        proc = _run("taxoforge_adapter", *args)
        if check:
            assert proc.returncode == 0, proc.stderr
        return proc

    return run


@pytest.fixture(scope="session")
def corpus(tmp_path_factory, primary):
    """Five synthetic trees, all in the train split, with both exports."""
    root = tmp_path_factory.mktemp("corpus")
    primary(
        "make-synthetic",
        "--out", root,
        "--n-trees", 5,
        "--size-min", 8,
        "--size-max", 12,
        "--depth", 3,
        "--seed", 7,
        "--split-weights", "1,0,0",
    )
    manifest = root / "manifest.json"
    pairs_closed = root / "pairs_closed.jsonl"
    pairs_open = root / "pairs_open.jsonl"
    primary(
        "export-pairs", "--corpus", manifest, "--split", "train",
        "--neg-policy", "all", "--out", pairs_closed,
    )
    primary(
        "export-pairs", "--corpus", manifest, "--split", "train",
        "--neg-policy", "all", "--open-book", "--out", pairs_open,
    )
    return SimpleNamespace(
        dir=root,
        manifest=manifest,
        train_trees=root / "train.jsonl",
        pairs_closed=pairs_closed,
        pairs_open=pairs_open,
    )


@pytest.fixture(scope="session")
def closed_model(tmp_path_factory, adapter, corpus):
    """A classifier overfit on the closed-book export of the corpus."""
    path = tmp_path_factory.mktemp("model") / "closed.pt"
    proc = adapter(
        "finetune",
        "--pairs", corpus.pairs_closed,
        "--out", path,
        "--mode", "closed-book",
        "--epochs", 60,
        "--seed", 1,
    )
    return SimpleNamespace(path=path, stdout=proc.stdout)


@pytest.fixture()
def chain_export(tmp_path):
    """A 6-record export for a single a -> b -> c chain tree."""

    def write(path, *, labels=None, template="A {child} is a {parent}.", contexts=None):
        pairs = [("a", "b", 1), ("b", "c", 1), ("b", "a", 0),
                 ("c", "a", 0), ("c", "b", 0), ("a", "c", 0)]
        ctx = contexts or {}
        with open(path, "w", encoding="utf-8") as fh:
            for i, (parent, child, label) in enumerate(pairs):
                fh.write(json.dumps({
                    "tree_id": "t",
                    "parent": parent,
                    "child": child,
                    "label": labels[i] if labels is not None else label,
                    "hypothesis": template.format(parent=parent, child=child),
                    "parent_context": ctx.get(parent, ""),
                    "child_context": ctx.get(child, ""),
                }) + "\n")
        return path

    def make(name="pairs.jsonl", **kwargs):
        return write(tmp_path / name, **kwargs)

    return make


@pytest.fixture()
def chain_trees(tmp_path):
    """Taxonomy JSONL holding the chain tree a -> b -> c."""
    path = tmp_path / "trees.jsonl"
    path.write_text(
        json.dumps({
            "id": "t",
            "terms": ["a", "b", "c"],
            "root": "a",
            "edges": [["a", "b"], ["b", "c"]],
        }) + "\n",
        encoding="utf-8",
    )
    return path
