"""Scoring every ordered pair of a tree's terms into matrix files.

For each tree the classifier scores all (parent, child) ordered pairs;
``scores[i][j]`` is the log-odds that ``terms[i]`` is the parent of
``terms[j]``. The two directions of a pair are distinct forward passes
over distinct inputs, which is asserted rather than assumed.
"""
from __future__ import annotations

import math
from pathlib import Path

import torch

from . import data
from .config import AdapterError
from .model import log_odds

DEFAULT_BATCH = 128


def score_tree(bundle: dict, terms: list[str], *, batch_size: int = DEFAULT_BATCH):
    """Dense score matrix (lists of floats; diagonal None) for one tree."""
    torch.set_num_threads(1)
    n = len(terms)
    scores = [[None] * n for _ in range(n)]
    if n == 1:
        return scores

    empty = [t for t in terms if not data.tokenize(t)]
    if empty:
        raise AdapterError(
            "term encoding failure", "no tokens for " + ", ".join(map(repr, empty))
        )

    mode, vocab, max_len = bundle["mode"], bundle["vocab"], bundle["max_len"]
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    encoded = [
        data.encode_record(
            (terms[i], terms[j]),
            mode,
            vocab,
            max_len,
            template=bundle["template"],
            contexts=bundle["contexts"],
        )
        for i, j in pairs
    ]
    by_pair = dict(zip(pairs, (ids for ids, _ in encoded)))
    for i, j in pairs:
        if i < j and by_pair[(i, j)] == by_pair[(j, i)]:
            raise AdapterError(
                "direction-insensitive inputs", f"({terms[i]!r}, {terms[j]!r})"
            )

    model = bundle["model"]
    values = []
    with torch.no_grad():
        for start in range(0, len(encoded), batch_size):
            ids, segments, mask = data.pad_batch(encoded[start : start + batch_size])
            logits = model(
                torch.from_numpy(ids),
                torch.from_numpy(segments),
                torch.from_numpy(mask),
            )
            values.extend(float(v) for v in log_odds(logits))

    for (i, j), value in zip(pairs, values):
        if not math.isfinite(value):
            raise AdapterError(
                "non-finite score", f"({terms[i]!r}, {terms[j]!r}): {value}"
            )
        scores[i][j] = value
    return scores


def emit_matrices(
    bundle: dict, trees_path, out_dir, *, batch_size: int = DEFAULT_BATCH, log=print
) -> list[Path]:
    """Write one score-matrix file per tree; returns the paths written."""
    trees = data.read_tree_terms(trees_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for tree_id, terms in trees:
        scores = score_tree(bundle, terms, batch_size=batch_size)
        path = out / f"{tree_id}.json"
        data.write_score_matrix(path, tree_id, terms, scores)
        written.append(path)
        log(f"wrote {path} ({len(terms)} terms)")
    return written
