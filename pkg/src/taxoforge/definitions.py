"""Definition handling: stores, embeddings, relevance re-ranking, contexts.

Terms can carry several candidate definitions scraped from different
sources, many of which describe the wrong sense. Re-ranking orders them by
cosine similarity between the definition's average word embedding and the
average embedding of every term in the problem, so definitions that talk
about the right domain float to the top.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .types import TermSet, ValidationError, canonicalize_term, parse_json

_EDGE_PUNCT = re.compile(r"^\W+|\W+$", re.UNICODE)

DEFAULT_MAX_DEFS = 3
DEFAULT_MAX_CHARS = 512


def canonicalize_token(tok: str) -> str:
    """Strip surrounding punctuation and lowercase; may return ''."""
    return _EDGE_PUNCT.sub("", tok).lower()


def tokenize(text: str) -> list[str]:
    """Whitespace tokenization with per-token canonicalization."""
    out = []
    for tok in text.split():
        tok = canonicalize_token(tok)
        if tok:
            out.append(tok)
    return out


@dataclass(frozen=True)
class DefinitionRecord:
    term: str
    source: str
    text: str
    relevance: float = 0.0

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError("empty definition text", self.term)


class DefinitionStore:
    """Definitions keyed by canonical term; order within a term is rank order.

    Duplicate (term, source, text) records are dropped, first occurrence
    kept.
    """

    def __init__(self, language: str = "und"):
        self.language = language
        self._records: dict[str, list[DefinitionRecord]] = {}

    def add(self, record: DefinitionRecord) -> None:
        term = canonicalize_term(record.term)
        if not term:
            raise ValidationError("empty term", "definition record")
        if record.term != term:
            record = replace(record, term=term)
        bucket = self._records.setdefault(term, [])
        if any(r.source == record.source and r.text == record.text for r in bucket):
            return
        bucket.append(record)

    def get(self, term: str) -> list[DefinitionRecord]:
        return list(self._records.get(canonicalize_term(term), ()))

    def replace_all(self, term: str, records: list[DefinitionRecord]) -> None:
        self._records[canonicalize_term(term)] = list(records)

    @property
    def terms(self) -> list[str]:
        return list(self._records)

    def __len__(self) -> int:
        return sum(len(v) for v in self._records.values())

    def __contains__(self, term: str) -> bool:
        return canonicalize_term(term) in self._records


def load_definitions(
    path, language: str | None = None, strict: bool = True
) -> DefinitionStore:
    """Read a definitions file: one JSON object per line.

    Each line holds ``{"term", "language", "definitions": [{"source", "text"}]}``.
    Lines for other languages are skipped when ``language`` is given. A
    malformed line aborts with its line number in strict mode and is
    skipped otherwise.
    """
    store = DefinitionStore(language or "und")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = parse_json(line, f"{path}:{lineno}")
                if not isinstance(obj, dict) or "term" not in obj or "definitions" not in obj:
                    raise ValidationError("malformed definition record", f"{path}:{lineno}")
                if language is not None and obj.get("language", language) != language:
                    continue
                for d in obj["definitions"]:
                    if not isinstance(d, dict) or "text" not in d:
                        raise ValidationError(
                            "malformed definition record", f"{path}:{lineno}"
                        )
                    store.add(
                        DefinitionRecord(
                            term=obj["term"],
                            source=str(d.get("source", "unknown")),
                            text=str(d["text"]),
                        )
                    )
                if language is None and "language" in obj:
                    store.language = str(obj["language"])
            except ValidationError:
                if strict:
                    raise
    return store


def dump_definitions(store: DefinitionStore, path) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for term in store.terms:
            obj = {
                "term": term,
                "language": store.language,
                "definitions": [
                    {"source": r.source, "text": r.text} for r in store.get(term)
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class EmbeddingTable:
    """Fixed-dimension word vectors keyed by canonical token."""

    dimension: int
    vectors: dict

    def __post_init__(self):
        if self.dimension < 1:
            raise ValidationError("non-positive embedding dimension", str(self.dimension))

    def get(self, token: str) -> np.ndarray | None:
        return self.vectors.get(canonicalize_token(token))

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(path) -> EmbeddingTable:
    """Read text-format embeddings: ``token v1 v2 ...`` per line.

    An optional ``count dim`` header line is accepted. Every vector must
    share one dimension.
    """
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            parts = [p for p in parts if p]
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    declared = int(parts[1])
                    int(parts[0])
                except ValueError:
                    declared = None
                if declared is not None:
                    dim = declared
                    continue
            token = canonicalize_token(parts[0])
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError as e:
                raise ValidationError(
                    "malformed embedding line", f"{path}:{lineno}"
                ) from e
            if not np.all(np.isfinite(vec)):
                raise ValidationError("non-finite embedding", f"{path}:{lineno}")
            if dim is None:
                dim = len(vec)
            if len(vec) != dim or dim == 0:
                raise ValidationError(
                    "dimension mismatch", f"{path}:{lineno}: {len(vec)} vs {dim}"
                )
            if token:
                vec.setflags(write=False)
                vectors[token] = vec
    if dim is None:
        dim = 1  # empty file: a usable table where every lookup misses
    return EmbeddingTable(dimension=dim, vectors=vectors)


def dump_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table.vectors)} {table.dimension}\n")
        for token in sorted(table.vectors):
            vals = " ".join(repr(float(x)) for x in table.vectors[token])
            fh.write(f"{token} {vals}\n")


def load_stopwords(path) -> frozenset[str]:
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tok = canonicalize_token(line.strip())
            if tok:
                words.add(tok)
    return frozenset(words)


def bundled_stopwords(language: str = "en") -> frozenset[str]:
    """Stopword list shipped with the package."""
    ref = resources.files("taxoforge").joinpath(f"data/stopwords_{language}.txt")
    if not ref.is_file():
        raise ValidationError("unknown stopword language", language)
    words = set()
    for line in ref.read_text(encoding="utf-8").splitlines():
        tok = canonicalize_token(line.strip())
        if tok:
            words.add(tok)
    return frozenset(words)


def avg_embedding(
    tokens, table: EmbeddingTable, stopwords: frozenset[str] = frozenset()
) -> np.ndarray:
    """Mean vector of the in-vocabulary, non-stopword tokens.

    Returns the zero vector when nothing survives filtering, which the
    cosine treats as "no information".
    """
    kept = []
    for tok in tokens:
        tok = canonicalize_token(tok)
        if not tok or tok in stopwords:
            continue
        vec = table.vectors.get(tok)
        if vec is not None:
            kept.append(vec)
    if not kept:
        return np.zeros(table.dimension, dtype=np.float64)
    return np.mean(kept, axis=0)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, defined as 0.0 when either vector is zero."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def term_set_reference_vector(
    term_set: TermSet, table: EmbeddingTable, stopwords: frozenset[str] = frozenset()
) -> np.ndarray:
    """Average embedding of every token of every term in the set."""
    tokens: list[str] = []
    for term in term_set.terms:
        tokens.extend(term.split())
    return avg_embedding(tokens, table, stopwords)


def rerank_definitions(
    term: str,
    records: list[DefinitionRecord],
    reference: np.ndarray,
    table: EmbeddingTable,
    stopwords: frozenset[str] = frozenset(),
) -> list[DefinitionRecord]:
    """Order ``records`` by relevance to the reference vector, descending.

    Relevance is the cosine between the definition's average embedding and
    ``reference``. The sort is stable, so with an empty table (all
    relevances 0.0) the incoming order is preserved.
    """
    scored = [
        replace(r, relevance=cosine(avg_embedding(tokenize(r.text), table, stopwords), reference))
        for r in records
    ]
    return sorted(scored, key=lambda r: -r.relevance)


def rerank_store(
    store: DefinitionStore,
    term_set: TermSet,
    table: EmbeddingTable,
    stopwords: frozenset[str] = frozenset(),
) -> DefinitionStore:
    """Store restricted to ``term_set`` with per-term re-ranked definitions."""
    reference = term_set_reference_vector(term_set, table, stopwords)
    out = DefinitionStore(store.language)
    for term in term_set.terms:
        records = store.get(term)
        if records:
            out.replace_all(
                term, rerank_definitions(term, records, reference, table, stopwords)
            )
    return out


def build_context(
    term: str,
    records: list[DefinitionRecord],
    max_defs: int = DEFAULT_MAX_DEFS,
    max_chars: int = DEFAULT_MAX_CHARS,
) -> str:
    """Concatenate a term with its top-ranked definitions, ending in ' .'.

    Definitions are added in rank order until either cap would be
    exceeded. A term with no usable definitions yields ``"term ."``, so
    closed-book callers degrade to a bare-term context. The term is used
    verbatim; callers pass already-canonical terms.
    """

    def assemble(parts: list[str]) -> str:
        if parts:
            return term + " " + ", ".join(parts) + " ."
        return term + " ."

    chosen: list[str] = []
    for rec in records:
        if len(chosen) >= max_defs:
            break
        text = rec.text.strip().rstrip(".").strip()
        if not text:
            continue
        candidate = chosen + [text]
        if len(assemble(candidate)) > max_chars:
            break
        chosen = candidate
    return assemble(chosen)


def build_pair_context(
    v_i: str,
    v_j: str,
    store: DefinitionStore,
    max_defs: int = DEFAULT_MAX_DEFS,
    max_chars: int = DEFAULT_MAX_CHARS,
) -> tuple[str, str]:
    """Context strings for a candidate (parent, child) pair.

    The store must already be ranked; downstream encoders insert their own
    special tokens around these.
    """
    return (
        build_context(v_i, store.get(v_i), max_defs, max_chars),
        build_context(v_j, store.get(v_j), max_defs, max_chars),
    )
