"""Domain types for taxonomy induction problems.

A problem is a set of terms plus an n x n matrix of directed parenthood
scores; the solver turns that into a rooted tree. Types here validate
eagerly so downstream code can assume well-formed inputs, and every
violation raises :class:`ValidationError` carrying a short rule name.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# In-memory marker for the unused diagonal. Kept as -inf rather than NaN so
# that argmax over a column never selects a self-edge.
ABSENT = float("-inf")


class ValidationError(ValueError):
    """An input violated a structural rule; ``rule`` names the rule."""

    def __init__(self, rule: str, detail: str = ""):
        self.rule = rule
        super().__init__(f"{rule} ({detail})" if detail else rule)


def canonicalize_term(raw: str) -> str:
    """Canonical form of a term: underscores to spaces, trimmed, lowercased."""
    return raw.replace("_", " ").strip().lower()


@dataclass(frozen=True)
class TermSet:
    """The vocabulary of one induction problem, in canonical form."""

    id: str
    terms: tuple[str, ...]

    def __post_init__(self):
        if not self.id:
            raise ValidationError("empty id")
        if len(self.terms) < 1:
            raise ValidationError("empty term set", self.id)
        seen = set()
        for t in self.terms:
            if not t:
                raise ValidationError("empty term", self.id)
            if t != canonicalize_term(t):
                raise ValidationError("non-canonical term", f"{self.id}: {t!r}")
            if t in seen:
                raise ValidationError("duplicate term", f"{self.id}: {t!r}")
            seen.add(t)
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.terms)})

    @classmethod
    def build(cls, id: str, raw_terms) -> "TermSet":
        """Construct from raw strings, canonicalizing each one."""
        return cls(id, tuple(canonicalize_term(t) for t in raw_terms))

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return canonicalize_term(term) in self._index

    def index_of(self, term: str) -> int:
        i = self._index.get(canonicalize_term(term))
        if i is None:
            raise ValidationError("unknown term", f"{self.id}: {term!r}")
        return i


@dataclass(frozen=True)
class EdgeScoreMatrix:
    """Pairwise parenthood log-odds for one problem.

    ``scores[i, j]`` scores term i as the parent of term j. The diagonal is
    never a real score; it is stored as ``ABSENT`` in memory and serialized
    as null. Off-diagonal entries must be finite.
    """

    tree_id: str
    term_order: tuple[str, ...]
    scores: np.ndarray

    def __post_init__(self):
        # Reuse TermSet validation for the term list itself.
        TermSet(self.tree_id, self.term_order)
        n = len(self.term_order)
        s = np.array(self.scores, dtype=np.float64)
        if s.shape != (n, n):
            raise ValidationError(
                "dimension mismatch", f"{self.tree_id}: shape {s.shape} vs {n} terms"
            )
        if n > 1:
            off = ~np.eye(n, dtype=bool)
            if not np.all(np.isfinite(s[off])):
                raise ValidationError("non-finite score", self.tree_id)
        np.fill_diagonal(s, ABSENT)
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)

    @property
    def n(self) -> int:
        return len(self.term_order)

    def term_set(self) -> TermSet:
        return TermSet(self.tree_id, self.term_order)

    def to_obj(self) -> dict:
        rows = []
        for i in range(self.n):
            rows.append(
                [None if i == j else float(self.scores[i, j]) for j in range(self.n)]
            )
        return {"tree_id": self.tree_id, "terms": list(self.term_order), "scores": rows}

    @classmethod
    def from_obj(cls, obj) -> "EdgeScoreMatrix":
        if not isinstance(obj, dict):
            raise ValidationError("malformed score matrix", "not an object")
        for key in ("tree_id", "terms", "scores"):
            if key not in obj:
                raise ValidationError("malformed score matrix", f"missing key {key!r}")
        terms = obj["terms"]
        rows = obj["scores"]
        if not isinstance(terms, list) or not all(isinstance(t, str) for t in terms):
            raise ValidationError("malformed score matrix", "terms must be strings")
        n = len(terms)
        if not isinstance(rows, list) or len(rows) != n:
            raise ValidationError(
                "dimension mismatch", f"{obj['tree_id']}: {len(rows)} rows vs {n} terms"
            )
        scores = np.zeros((n, n), dtype=np.float64)
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != n:
                raise ValidationError(
                    "dimension mismatch", f"{obj['tree_id']}: row {i}"
                )
            for j, v in enumerate(row):
                if i == j:
                    if v is not None:
                        raise ValidationError(
                            "non-null diagonal", f"{obj['tree_id']}: row {i}"
                        )
                    scores[i, j] = ABSENT
                elif isinstance(v, (int, float)) and not isinstance(v, bool):
                    scores[i, j] = float(v)
                else:
                    raise ValidationError(
                        "malformed score matrix",
                        f"{obj['tree_id']}: non-numeric score at ({i}, {j})",
                    )
        return cls(obj["tree_id"], tuple(terms), scores)


@dataclass(frozen=True)
class Taxonomy:
    """A rooted tree over a term set; edges run parent to child.

    ``parents[j]`` is the parent index of node j, with -1 at the root.
    Construction validates the arborescence property: exactly one root and
    every node's parent chain reaches it.
    """

    term_set: TermSet
    root: int
    parents: tuple[int, ...]

    def __post_init__(self):
        n = len(self.term_set)
        if not 0 <= self.root < n:
            raise ValidationError("root out of range", f"{self.term_set.id}: {self.root}")
        if len(self.parents) != n:
            raise ValidationError(
                "parent map size", f"{self.term_set.id}: {len(self.parents)} vs {n}"
            )
        for j, p in enumerate(self.parents):
            if j == self.root:
                if p != -1:
                    raise ValidationError("root has a parent", self.term_set.id)
            elif not 0 <= p < n or p == j:
                raise ValidationError(
                    "invalid parent index", f"{self.term_set.id}: node {j} -> {p}"
                )
        for j in range(n):
            v, hops = j, 0
            while v != self.root:
                v = self.parents[v]
                hops += 1
                if hops > n:
                    raise ValidationError("not an arborescence", self.term_set.id)

    @property
    def n(self) -> int:
        return len(self.term_set)

    @property
    def id(self) -> str:
        return self.term_set.id

    def term(self, i: int) -> str:
        return self.term_set.terms[i]

    def edges(self) -> list[tuple[int, int]]:
        """Edges as (parent, child) index pairs, ordered by child index."""
        return [(p, j) for j, p in enumerate(self.parents) if p != -1]

    def children(self) -> dict[int, list[int]]:
        kids: dict[int, list[int]] = {i: [] for i in range(self.n)}
        for p, c in self.edges():
            kids[p].append(c)
        return kids

    def depths(self) -> list[int]:
        out = [0] * self.n
        for j in range(self.n):
            v, d = j, 0
            while self.parents[v] != -1:
                v = self.parents[v]
                d += 1
            out[j] = d
        return out

    def to_obj(self) -> dict:
        ts = self.term_set
        return {
            "id": ts.id,
            "terms": list(ts.terms),
            "root": ts.terms[self.root],
            "edges": [[ts.terms[p], ts.terms[c]] for p, c in self.edges()],
        }

    @classmethod
    def from_obj(cls, obj) -> "Taxonomy":
        if not isinstance(obj, dict):
            raise ValidationError("malformed taxonomy", "not an object")
        for key in ("id", "terms", "root", "edges"):
            if key not in obj:
                raise ValidationError("malformed taxonomy", f"missing key {key!r}")
        ts = TermSet(obj["id"], tuple(obj["terms"]))
        root = ts.index_of(obj["root"])
        parents = [-1] * len(ts)
        seen_child = set()
        for e in obj["edges"]:
            if not isinstance(e, list) or len(e) != 2:
                raise ValidationError("malformed taxonomy", f"{ts.id}: bad edge {e!r}")
            p, c = ts.index_of(e[0]), ts.index_of(e[1])
            if c in seen_child:
                raise ValidationError("multiple parents", f"{ts.id}: {e[1]!r}")
            seen_child.add(c)
            parents[c] = p
        for j in range(len(ts)):
            if j != root and parents[j] == -1:
                raise ValidationError("missing parent", f"{ts.id}: {ts.terms[j]!r}")
        return cls(ts, root, tuple(parents))


@dataclass(frozen=True)
class AncestorSet:
    """All (ancestor, descendant) term pairs implied by one taxonomy."""

    pairs: frozenset[tuple[str, str]]

    def __post_init__(self):
        for a, d in self.pairs:
            if a == d:
                raise ValidationError("reflexive ancestor pair", repr(a))

    def __len__(self) -> int:
        return len(self.pairs)


def _reject_nonfinite_literal(name: str):
    raise ValidationError("non-finite score", f"literal {name}")


def parse_json(text: str, source: str = "<string>"):
    """Parse JSON, rejecting NaN/Infinity literals that json.loads accepts."""
    try:
        return json.loads(text, parse_constant=_reject_nonfinite_literal)
    except json.JSONDecodeError as e:
        raise ValidationError("malformed file", f"{source}: {e}") from e


def dump_json(obj) -> str:
    """Canonical one-line JSON encoding used for every artifact this package writes."""
    return json.dumps(obj, ensure_ascii=False, allow_nan=False)


def load_score_matrix(path, term_set: TermSet | None = None) -> EdgeScoreMatrix:
    """Read a score matrix file, optionally checking it against a term set."""
    text = Path(path).read_text(encoding="utf-8")
    matrix = EdgeScoreMatrix.from_obj(parse_json(text, str(path)))
    if term_set is not None and matrix.term_order != term_set.terms:
        raise ValidationError(
            "term mismatch", f"{matrix.tree_id}: matrix terms differ from {term_set.id}"
        )
    return matrix


def dump_score_matrix(matrix: EdgeScoreMatrix, path) -> None:
    Path(path).write_text(dump_json(matrix.to_obj()) + "\n", encoding="utf-8")


def load_taxonomy(path) -> Taxonomy:
    text = Path(path).read_text(encoding="utf-8")
    return Taxonomy.from_obj(parse_json(text, str(path)))


def dump_taxonomy(tree: Taxonomy, path) -> None:
    Path(path).write_text(dump_json(tree.to_obj()) + "\n", encoding="utf-8")
