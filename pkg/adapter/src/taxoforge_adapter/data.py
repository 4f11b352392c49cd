"""Reading pair exports and turning text into model inputs.

Input records come from the toolkit's ``export-pairs`` command: one JSON
object per line with a labeled (parent, child) candidate edge, a
hypothesis sentence, and optional definition contexts. Sequences follow
the usual encoder layout: ``[CLS] tokens [SEP]`` for a single sentence,
``[CLS] tokens_a [SEP] tokens_b [SEP]`` with segment ids 0/1 for a pair.
"""
from __future__ import annotations

import json
import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import AdapterError

PAD, UNK, CLS, SEP = 0, 1, 2, 3
SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]")


@dataclass(frozen=True)
class PairRecord:
    """One labeled candidate edge from a pair-export file."""

    tree_id: str
    parent: str
    child: str
    label: int
    hypothesis: str
    parent_context: str = ""
    child_context: str = ""


def tokenize(text: str) -> list[str]:
    """Lowercase whitespace tokens with edge punctuation stripped."""
    out = []
    for raw in text.lower().split():
        tok = raw.strip(string.punctuation)
        if tok:
            out.append(tok)
    return out


def read_pair_records(path) -> list[PairRecord]:
    """Parse a pair-export JSONL file; error on empty or malformed input."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise AdapterError("malformed pair record", f"{path}:{lineno}") from e
            try:
                records.append(
                    PairRecord(
                        tree_id=obj["tree_id"],
                        parent=obj["parent"],
                        child=obj["child"],
                        label=int(obj["label"]),
                        hypothesis=obj["hypothesis"],
                        parent_context=obj.get("parent_context", ""),
                        child_context=obj.get("child_context", ""),
                    )
                )
            except (KeyError, TypeError, ValueError) as e:
                raise AdapterError("malformed pair record", f"{path}:{lineno}") from e
    if not records:
        raise AdapterError("empty export", str(path))
    labels = {r.label for r in records}
    if labels - {0, 1}:
        raise AdapterError("invalid label", str(sorted(labels - {0, 1})))
    if len(labels) < 2:
        raise AdapterError("single-class labels", f"all labels are {labels.pop()}")
    return records


def check_template(records: list[PairRecord], template: str) -> None:
    """Verify every stored hypothesis matches the template rendering."""
    for r in records:
        expected = template.format(parent=r.parent, child=r.child)
        if r.hypothesis != expected:
            raise AdapterError(
                "hypothesis template mismatch",
                f"{r.tree_id} ({r.parent!r}, {r.child!r}): "
                f"got {r.hypothesis!r}, template renders {expected!r}",
            )


def context_map(records: list[PairRecord]) -> dict[str, str]:
    """Per-term definition context recovered from the export records.

    A term's context is role-independent, so a term seen as both parent
    and child must carry the same string; a conflict means the export
    file was tampered with or stitched together from different runs.
    """
    contexts: dict[str, str] = {}
    for r in records:
        for term, ctx in ((r.parent, r.parent_context), (r.child, r.child_context)):
            if term in contexts and contexts[term] != ctx:
                raise AdapterError(
                    "inconsistent contexts",
                    f"{r.tree_id}: term {term!r} has two different contexts",
                )
            contexts[term] = ctx
    return contexts


def build_vocab(token_lists: list[list[str]]) -> dict[str, int]:
    """Word-to-id mapping: specials first, then sorted observed tokens."""
    vocab = {tok: i for i, tok in enumerate(SPECIALS)}
    for tok in sorted({t for tokens in token_lists for t in tokens}):
        vocab[tok] = len(vocab)
    return vocab


def encode_single(tokens: list[str], vocab: dict[str, int], max_len: int):
    """``[CLS] tokens [SEP]`` as (ids, segment ids), truncated to fit."""
    body = tokens[: max_len - 2]
    ids = [CLS] + [vocab.get(t, UNK) for t in body] + [SEP]
    return ids, [0] * len(ids)


def encode_pair(
    tokens_a: list[str], tokens_b: list[str], vocab: dict[str, int], max_len: int
):
    """``[CLS] a [SEP] b [SEP]`` with segments 0/1, truncated evenly.

    When the two sides overflow the budget, each keeps at most half of
    it, so neither side can starve the other.
    """
    budget = max_len - 3
    half = budget // 2
    if len(tokens_a) + len(tokens_b) > budget:
        keep_a = min(len(tokens_a), max(half, budget - len(tokens_b)))
        tokens_a = tokens_a[:keep_a]
        tokens_b = tokens_b[: budget - len(tokens_a)]
    ids_a = [vocab.get(t, UNK) for t in tokens_a]
    ids_b = [vocab.get(t, UNK) for t in tokens_b]
    ids = [CLS] + ids_a + [SEP] + ids_b + [SEP]
    segments = [0] * (len(ids_a) + 2) + [1] * (len(ids_b) + 1)
    return ids, segments


def encode_record(
    record_or_pair, mode: str, vocab: dict[str, int], max_len: int, *,
    template: str | None = None, contexts: dict[str, str] | None = None
):
    """Model input for one record (training) or (parent, child) pair (emission).

    Training reads text straight off the :class:`PairRecord`; emission
    rebuilds it for an arbitrary ordered pair from the saved template or
    context map, which keeps the two phases byte-for-byte consistent.
    """
    if isinstance(record_or_pair, PairRecord):
        r = record_or_pair
        if mode == "closed-book":
            return encode_single(tokenize(r.hypothesis), vocab, max_len)
        return encode_pair(
            tokenize(r.parent_context), tokenize(r.child_context), vocab, max_len
        )
    parent, child = record_or_pair
    if mode == "closed-book":
        text = template.format(parent=parent, child=child)
        return encode_single(tokenize(text), vocab, max_len)
    parent_ctx = contexts.get(parent, f"{parent} .")
    child_ctx = contexts.get(child, f"{child} .")
    return encode_pair(tokenize(parent_ctx), tokenize(child_ctx), vocab, max_len)


def pad_batch(encoded: list[tuple[list[int], list[int]]]):
    """Stack variable-length (ids, segments) into padded int64 arrays.

    Returns ``(ids, segments, padding_mask)`` where the mask is True at
    padding positions, matching the encoder's key-padding convention.
    """
    width = max(len(ids) for ids, _ in encoded)
    n = len(encoded)
    ids = np.full((n, width), PAD, dtype=np.int64)
    segments = np.zeros((n, width), dtype=np.int64)
    mask = np.ones((n, width), dtype=bool)
    for i, (seq, seg) in enumerate(encoded):
        ids[i, : len(seq)] = seq
        segments[i, : len(seq)] = seg
        mask[i, : len(seq)] = False
    return ids, segments, mask


def read_tree_terms(path) -> list[tuple[str, list[str]]]:
    """Tree ids and term lists from a taxonomy JSONL file.

    Only the ``id`` and ``terms`` fields are consulted; edges stay
    untouched so emitted scores cannot leak gold structure.
    """
    out = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                tree_id, terms = obj["id"], list(obj["terms"])
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise AdapterError("malformed tree record", f"{path}:{lineno}") from e
            if not terms or not all(isinstance(t, str) and t for t in terms):
                raise AdapterError("malformed tree record", f"{path}:{lineno}")
            if len(set(terms)) != len(terms):
                raise AdapterError("duplicate terms", f"{tree_id} at {path}:{lineno}")
            if tree_id in seen:
                raise AdapterError("duplicate tree id", tree_id)
            seen.add(tree_id)
            out.append((tree_id, terms))
    if not out:
        raise AdapterError("empty tree file", str(path))
    return out


def write_score_matrix(path, tree_id: str, terms: list[str], scores) -> None:
    """Write one score-matrix JSON file with a null diagonal."""
    n = len(terms)
    rows = [
        [None if i == j else float(scores[i][j]) for j in range(n)] for i in range(n)
    ]
    obj = {"tree_id": tree_id, "terms": list(terms), "scores": rows}
    Path(path).write_text(
        json.dumps(obj, ensure_ascii=False, separators=(", ", ": ")) + "\n",
        encoding="utf-8",
    )
