"""Datasets of gold taxonomies: files, splits, profiles, synthetic corpora.

A corpus is a manifest pointing at train/dev/test tree files plus the
shared resources (definitions, embeddings, stopwords). The synthetic
generator builds corpora with controllable lexical regularity so scorer
experiments have a deterministic desk-scale benchmark.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .definitions import (
    DefinitionRecord,
    DefinitionStore,
    EmbeddingTable,
    dump_definitions,
    dump_embeddings,
    load_definitions,
    load_embeddings,
    load_stopwords,
)
from .types import Taxonomy, TermSet, ValidationError, dump_json, parse_json

SPLIT_NAMES = ("train", "dev", "test")
DEFAULT_SPLIT_WEIGHTS = (533, 114, 114)
PROFILE_SIZE_RANGE = (10, 50)
PROFILE_DEPTH = 3


@dataclass(frozen=True)
class DatasetSplit:
    name: str
    trees: tuple[Taxonomy, ...]

    def __len__(self) -> int:
        return len(self.trees)


def load_dataset(path, name: str = "dataset") -> DatasetSplit:
    """Read one taxonomy per line; errors carry the offending line number."""
    trees = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            obj = parse_json(line, f"{path}:{lineno}")
            try:
                tree = Taxonomy.from_obj(obj)
            except ValidationError as e:
                raise ValidationError(e.rule, f"{path}:{lineno}: {e}") from e
            if tree.id in seen:
                raise ValidationError("duplicate tree id", f"{path}:{lineno}: {tree.id}")
            seen.add(tree.id)
            trees.append(tree)
    return DatasetSplit(name, tuple(trees))


def write_dataset(split: DatasetSplit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tree in split.trees:
            fh.write(dump_json(tree.to_obj()) + "\n")


def split_counts(total: int, weights=DEFAULT_SPLIT_WEIGHTS) -> tuple[int, ...]:
    """Exact largest-remainder apportionment of ``total`` by ``weights``.

    Weights are taken as exact rationals, so integer weights such as
    (533, 114, 114) reproduce themselves when ``total`` is their sum.
    """
    if total < 0:
        raise ValidationError("negative total", str(total))
    fracs = [Fraction(w) for w in weights]
    if any(f < 0 for f in fracs) or sum(fracs) == 0:
        raise ValidationError("invalid split weights", repr(weights))
    denom = sum(fracs)
    quotas = [total * f / denom for f in fracs]
    counts = [int(q) for q in quotas]  # floor; quotas are non-negative
    remainders = [q - c for q, c in zip(quotas, counts)]
    short = total - sum(counts)
    order = sorted(range(len(weights)), key=lambda i: (-remainders[i], i))
    for i in order[:short]:
        counts[i] += 1
    return tuple(counts)


def split_dataset(
    trees, weights=DEFAULT_SPLIT_WEIGHTS, seed: int = 0
) -> dict[str, DatasetSplit]:
    """Shuffle trees with ``seed`` and slice into train/dev/test by weights."""
    trees = list(trees)
    if not trees:
        raise ValidationError("empty input", "no trees to split")
    if len(weights) != len(SPLIT_NAMES):
        raise ValidationError("invalid split weights", repr(weights))
    counts = split_counts(len(trees), weights)
    perm = np.random.default_rng(seed).permutation(len(trees))
    shuffled = [trees[i] for i in perm]
    splits = {}
    start = 0
    for name, count in zip(SPLIT_NAMES, counts):
        splits[name] = DatasetSplit(name, tuple(shuffled[start : start + count]))
        start += count
    return splits


def check_profile(
    tree: Taxonomy,
    size_range: tuple[int, int] = PROFILE_SIZE_RANGE,
    depth: int = PROFILE_DEPTH,
) -> list[str]:
    """Warnings (not errors) for trees outside the expected corpus shape."""
    warnings = []
    lo, hi = size_range
    if not lo <= tree.n <= hi:
        warnings.append(f"size {tree.n} outside [{lo},{hi}]")
    d = max(tree.depths())
    if d != depth:
        warnings.append(f"depth {d} != {depth}")
    return warnings


# ---------------------------------------------------------------------------
# Synthetic corpora


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs for the synthetic corpus generator.

    ``head_rate`` is the probability that a child term is built as
    "modifier + parent head token", which is what the head-match feature
    keys on; 0.0 removes that regularity entirely. ``def_mention_rate``
    is the probability that a term's definition list contains one
    definition mentioning its parent.
    """

    n_trees: int = 140
    size_min: int = 10
    size_max: int = 50
    depth: int = PROFILE_DEPTH
    head_rate: float = 0.8
    def_mention_rate: float = 0.8
    embedding_dim: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValidationError("empty corpus spec", "n_trees < 1")
        if self.size_min > self.size_max or self.size_min < 1:
            raise ValidationError(
                "invalid size range", f"[{self.size_min},{self.size_max}]"
            )
        if self.size_min < self.depth + 1:
            raise ValidationError(
                "size range incompatible with depth",
                f"need at least {self.depth + 1} nodes for depth {self.depth}",
            )
        for name in ("head_rate", "def_mention_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError("rate out of range", f"{name}={v}")
        if self.embedding_dim < 1:
            raise ValidationError("non-positive embedding dimension")


@dataclass
class SyntheticCorpus:
    trees: list[Taxonomy]
    definitions: DefinitionStore
    embeddings: EmbeddingTable
    stopwords: frozenset[str]


_CONSONANTS = "bcdfglmnprstvz"
_VOWELS = "aeiou"
_FUNCTION_WORDS = frozenset(
    ["a", "an", "the", "is", "of", "kind", "sort", "type", "with", "or"]
)


def _fresh_word(rng: np.random.Generator, used: set[str]) -> str:
    while True:
        syllables = rng.integers(2, 5)
        word = "".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))]
            + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(syllables)
        )
        if word not in used and word not in _FUNCTION_WORDS:
            used.add(word)
            return word


def make_synthetic_corpus(spec: SyntheticSpec) -> SyntheticCorpus:
    """Deterministic corpus of gold trees with definitions and embeddings.

    Every tree has maximum depth exactly ``spec.depth`` (a root chain
    guarantees it) and a size drawn from the configured range. Content
    words get random unit embeddings; function words are stopwords and
    deliberately have no vectors.
    """
    rng = np.random.default_rng(spec.seed)
    used: set[str] = set()
    fillers = [_fresh_word(rng, used) for _ in range(60)]
    content_words: set[str] = set(fillers)

    trees: list[Taxonomy] = []
    store = DefinitionStore("en")
    sources = ("alpha", "beta", "gamma")

    for t in range(spec.n_trees):
        tree_id = f"synth-{t:04d}"
        size = int(rng.integers(spec.size_min, spec.size_max + 1))
        terms: list[str] = [_fresh_word(rng, used)]
        parents: list[int] = [-1]
        depths: list[int] = [0]

        def add_node(parent_idx: int) -> None:
            parent_head = terms[parent_idx].split()[-1]
            if rng.random() < spec.head_rate:
                term = f"{_fresh_word(rng, used)} {parent_head}"
            elif rng.random() < 0.5:
                term = f"{_fresh_word(rng, used)} {_fresh_word(rng, used)}"
            else:
                term = _fresh_word(rng, used)
            terms.append(term)
            parents.append(parent_idx)
            depths.append(depths[parent_idx] + 1)

        for _ in range(spec.depth):
            add_node(len(terms) - 1)  # chain pins the maximum depth
        while len(terms) < size:
            candidates = [i for i in range(len(terms)) if depths[i] < spec.depth]
            add_node(int(candidates[rng.integers(len(candidates))]))

        content_words.update(w for term in terms for w in term.split())
        tree = Taxonomy(TermSet(tree_id, tuple(terms)), 0, tuple(parents))
        trees.append(tree)

        for j, term in enumerate(terms):
            texts = []
            if parents[j] != -1 and rng.random() < spec.def_mention_rate:
                texts.append(f"a kind of {terms[parents[j]]}")
            for _ in range(int(rng.integers(1, 3))):
                f1 = fillers[rng.integers(len(fillers))]
                f2 = fillers[rng.integers(len(fillers))]
                texts.append(f"a sort of {f1} with {f2}")
            for k in rng.permutation(len(texts)):
                store.add(
                    DefinitionRecord(
                        term=term, source=sources[int(k) % len(sources)], text=texts[int(k)]
                    )
                )

    vectors = {}
    for word in sorted(content_words):
        v = rng.standard_normal(spec.embedding_dim)
        v = v / np.linalg.norm(v)
        v.setflags(write=False)
        vectors[word] = v
    table = EmbeddingTable(dimension=spec.embedding_dim, vectors=vectors)
    return SyntheticCorpus(trees, store, table, _FUNCTION_WORDS)


# ---------------------------------------------------------------------------
# Corpus manifests


@dataclass(frozen=True)
class CorpusManifest:
    """Paths of one corpus, resolved relative to the manifest location."""

    name: str
    language: str
    base_dir: Path
    splits: dict
    definitions: str | None = None
    embeddings: str | None = None
    stopwords: str | None = None

    def path(self, rel: str) -> Path:
        return self.base_dir / rel


@dataclass
class LoadedCorpus:
    name: str
    language: str
    splits: dict
    definitions: DefinitionStore | None
    embeddings: EmbeddingTable | None
    stopwords: frozenset


def load_manifest(path) -> CorpusManifest:
    path = Path(path)
    obj = parse_json(path.read_text(encoding="utf-8"), str(path))
    if not isinstance(obj, dict) or "splits" not in obj or "name" not in obj:
        raise ValidationError("malformed manifest", str(path))
    splits = obj["splits"]
    if not isinstance(splits, dict) or not splits:
        raise ValidationError("malformed manifest", f"{path}: no splits")
    return CorpusManifest(
        name=str(obj["name"]),
        language=str(obj.get("language", "und")),
        base_dir=path.parent,
        splits={str(k): str(v) for k, v in splits.items()},
        definitions=obj.get("definitions"),
        embeddings=obj.get("embeddings"),
        stopwords=obj.get("stopwords"),
    )


def load_corpus(manifest: CorpusManifest) -> LoadedCorpus:
    """Load every split and resource a manifest points at.

    Tree ids must be unique across splits; missing files are reported with
    the path the manifest resolved to.
    """
    splits = {}
    seen: dict[str, str] = {}
    for name, rel in manifest.splits.items():
        p = manifest.path(rel)
        if not p.is_file():
            raise ValidationError("missing corpus file", str(p))
        split = load_dataset(p, name)
        for tree in split.trees:
            if tree.id in seen:
                raise ValidationError(
                    "duplicate tree id", f"{tree.id} in {seen[tree.id]} and {name}"
                )
            seen[tree.id] = name
        splits[name] = split

    def optional(rel, loader):
        if rel is None:
            return None
        p = manifest.path(rel)
        if not p.is_file():
            raise ValidationError("missing corpus file", str(p))
        return loader(p)

    defs = optional(manifest.definitions, lambda p: load_definitions(p))
    table = optional(manifest.embeddings, load_embeddings)
    stops = optional(manifest.stopwords, load_stopwords)
    return LoadedCorpus(
        name=manifest.name,
        language=manifest.language,
        splits=splits,
        definitions=defs,
        embeddings=table,
        stopwords=stops if stops is not None else frozenset(),
    )


def write_corpus(
    corpus: SyntheticCorpus,
    out_dir,
    weights=DEFAULT_SPLIT_WEIGHTS,
    split_seed: int = 0,
    name: str = "synthetic",
) -> Path:
    """Write splits plus resources and return the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    splits = split_dataset(corpus.trees, weights, split_seed)
    for split_name, split in splits.items():
        write_dataset(split, out / f"{split_name}.jsonl")
    dump_definitions(corpus.definitions, out / "definitions.jsonl")
    dump_embeddings(corpus.embeddings, out / "embeddings.txt")
    (out / "stopwords.txt").write_text(
        "\n".join(sorted(corpus.stopwords)) + "\n", encoding="utf-8"
    )
    manifest = {
        "name": name,
        "language": corpus.definitions.language,
        "splits": {s: f"{s}.jsonl" for s in splits},
        "definitions": "definitions.jsonl",
        "embeddings": "embeddings.txt",
        "stopwords": "stopwords.txt",
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(dump_json(manifest) + "\n", encoding="utf-8")
    return manifest_path
