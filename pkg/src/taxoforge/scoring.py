"""Parenthood scorers: turning term pairs into edge score matrices.

Three routes produce scores. The oracle scorer derives them from a gold
tree (for calibration and noise studies). The feature scorer is a small
logistic regression over surface features of the pair plus its
definitions, trained here with plain full-batch gradient descent. External
scorers, such as a fine-tuned transformer, run out of process: this module
exports their training pairs and reads back the matrices they emit.

Scores everywhere are log-odds of "parent is a hypernym of child".
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .definitions import (
    DEFAULT_MAX_CHARS,
    DEFAULT_MAX_DEFS,
    DefinitionStore,
    EmbeddingTable,
    avg_embedding,
    build_context,
    cosine,
    rerank_store,
    tokenize,
)
from .types import (
    EdgeScoreMatrix,
    Taxonomy,
    TermSet,
    ValidationError,
    canonicalize_term,
    dump_json,
    parse_json,
)
from .types import load_score_matrix as load_external_matrix  # noqa: F401  (file contract bridge)

DEFAULT_TEMPLATE = "A {child} is a {parent}."

FEATURE_NAMES = (
    "head_match",
    "parent_in_child",
    "token_jaccard",
    "term_cosine",
    "definition_cosine",
    "definition_mention",
    "char4_dice",
)

MODEL_FORMAT = "taxoforge-feature-scorer"
MODEL_VERSION = 1


def make_hypothesis(parent: str, child: str, template: str = DEFAULT_TEMPLATE) -> str:
    """Natural-language parenthood statement for a candidate pair."""
    if "{parent}" not in template or "{child}" not in template:
        raise ValidationError("malformed template", template)
    return template.format(
        parent=canonicalize_term(parent), child=canonicalize_term(child)
    )


@dataclass(frozen=True)
class PairExample:
    """One labeled candidate edge, with optional definition contexts."""

    tree_id: str
    parent: str
    child: str
    label: int
    hypothesis: str
    parent_context: str = ""
    child_context: str = ""


@dataclass(frozen=True)
class AllNegatives:
    """Use every ordered non-edge pair as a negative."""


@dataclass(frozen=True)
class SampledNegatives:
    """Sample ``ratio`` negatives per positive, without replacement."""

    ratio: int = 5
    seed: int = 0


NegativePolicy = AllNegatives | SampledNegatives


def oracle_scores(
    gold: Taxonomy, margin: float = 1.0, noise_sigma: float = 0.0, seed: int = 0
) -> EdgeScoreMatrix:
    """Scores read off a gold tree: margin on gold edges, 0 elsewhere.

    Gaussian noise with the given sigma is added to every off-diagonal
    entry. With sigma 0 the gold tree is the unique maximizer, since each
    node's single best incoming edge is its gold parent.
    """
    if margin <= 0:
        raise ValidationError("non-positive margin", str(margin))
    n = gold.n
    scores = np.zeros((n, n))
    for p, c in gold.edges():
        scores[p, c] = margin
    if noise_sigma < 0:
        raise ValidationError("negative noise sigma", str(noise_sigma))
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        scores = scores + rng.normal(0.0, noise_sigma, size=(n, n))
    return EdgeScoreMatrix(gold.id, gold.term_set.terms, scores)


def stores_by_tree(trees, defs, embeddings, stopwords):
    """Per-tree definition stores, re-ranked when a raw store is given."""
    if defs is None:
        return {}
    if isinstance(defs, dict):
        return defs
    out = {}
    for tree in trees:
        term_set = tree.term_set if isinstance(tree, Taxonomy) else tree
        if embeddings is not None:
            out[term_set.id] = rerank_store(defs, term_set, embeddings, stopwords)
        else:
            out[term_set.id] = defs
    return out


def generate_training_pairs(
    trees: list[Taxonomy],
    defs: DefinitionStore | dict | None = None,
    embeddings: EmbeddingTable | None = None,
    stopwords: frozenset[str] = frozenset(),
    neg_policy: NegativePolicy = AllNegatives(),
    template: str = DEFAULT_TEMPLATE,
    max_defs: int = DEFAULT_MAX_DEFS,
    max_chars: int = DEFAULT_MAX_CHARS,
) -> list[PairExample]:
    """Labeled pairs from gold trees: edges positive, non-edges negative.

    With a definition store the contexts are filled from the per-tree
    re-ranked definitions; without one they stay empty (closed book).
    """
    stores = stores_by_tree(trees, defs, embeddings, stopwords)
    examples: list[PairExample] = []
    for index, tree in enumerate(trees):
        terms = tree.term_set.terms
        store = stores.get(tree.id)
        contexts = {}
        if store is not None:
            for t in terms:
                contexts[t] = build_context(t, store.get(t), max_defs, max_chars)

        def make(parent: str, child: str, label: int) -> PairExample:
            return PairExample(
                tree_id=tree.id,
                parent=parent,
                child=child,
                label=label,
                hypothesis=make_hypothesis(parent, child, template),
                parent_context=contexts.get(parent, ""),
                child_context=contexts.get(child, ""),
            )

        gold = {(terms[p], terms[c]) for p, c in tree.edges()}
        positives = [make(terms[p], terms[c], 1) for p, c in tree.edges()]
        negative_pairs = [
            (terms[i], terms[j])
            for i in range(tree.n)
            for j in range(tree.n)
            if i != j and (terms[i], terms[j]) not in gold
        ]
        if isinstance(neg_policy, SampledNegatives):
            if neg_policy.ratio < 1:
                raise ValidationError("non-positive negative ratio", str(neg_policy.ratio))
            k = neg_policy.ratio * len(positives)
            if k > len(negative_pairs):
                raise ValidationError(
                    "not enough negatives",
                    f"{tree.id}: requested {k}, available {len(negative_pairs)}",
                )
            rng = np.random.default_rng((neg_policy.seed, index))
            picks = rng.choice(len(negative_pairs), size=k, replace=False)
            negative_pairs = [negative_pairs[i] for i in sorted(picks)]
        elif not isinstance(neg_policy, AllNegatives):
            raise ValidationError("unknown negative policy", repr(neg_policy))
        examples.extend(positives)
        examples.extend(make(p, c, 0) for p, c in negative_pairs)
    return examples


def write_pair_examples(path, examples: list[PairExample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in examples:
            fh.write(
                dump_json(
                    {
                        "tree_id": e.tree_id,
                        "parent": e.parent,
                        "child": e.child,
                        "label": e.label,
                        "hypothesis": e.hypothesis,
                        "parent_context": e.parent_context,
                        "child_context": e.child_context,
                    }
                )
                + "\n"
            )


def read_pair_examples(path) -> list[PairExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            obj = parse_json(line, f"{path}:{lineno}")
            try:
                out.append(
                    PairExample(
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
                raise ValidationError("malformed pair record", f"{path}:{lineno}") from e
    return out


def _char_ngrams(s: str, n: int = 4) -> set[str]:
    return {s[i : i + n] for i in range(len(s) - n + 1)}


def featurize(
    parent: str,
    child: str,
    defs: DefinitionStore | None = None,
    embeddings: EmbeddingTable | None = None,
    stopwords: frozenset[str] = frozenset(),
) -> np.ndarray:
    """Surface feature vector for a candidate (parent, child) edge.

    Order and meaning are fixed by FEATURE_NAMES. ``defs`` is expected to
    be ranked already; only the child's top definition is consulted.
    Features whose inputs are unavailable are 0, so a closed-book call
    (no definitions) degrades gracefully. All values lie in [-1, 1].
    """
    p = canonicalize_term(parent)
    c = canonicalize_term(child)
    pt = p.split()
    ct = c.split()
    f = np.zeros(len(FEATURE_NAMES), dtype=np.float64)

    if pt and ct and pt[-1] == ct[-1] and p != c:
        f[0] = 1.0
    if p and p in c:
        f[1] = 1.0
    union = set(pt) | set(ct)
    if union:
        f[2] = len(set(pt) & set(ct)) / len(union)

    top_def = None
    if defs is not None:
        records = defs.get(c)
        if records:
            top_def = records[0]

    if embeddings is not None:
        pv = avg_embedding(pt, embeddings, stopwords)
        cv = avg_embedding(ct, embeddings, stopwords)
        f[3] = cosine(pv, cv)
        if top_def is not None:
            dv = avg_embedding(tokenize(top_def.text), embeddings, stopwords)
            f[4] = cosine(pv, dv)
    if top_def is not None and p and p in canonicalize_term(top_def.text):
        f[5] = 1.0

    pg = _char_ngrams(p)
    cg = _char_ngrams(c)
    if pg and cg:
        f[6] = 2.0 * len(pg & cg) / (len(pg) + len(cg))
    return f


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_grad(
    weights: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy with L2 on non-bias weights, and its gradient.

    ``weights`` has one entry per feature plus a trailing bias. Uses the
    overflow-safe formulation max(z,0) - z*y + log1p(exp(-|z|)).
    """
    w, b = weights[:-1], weights[-1]
    z = X @ w + b
    per_example = np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))
    loss = float(np.mean(per_example) + 0.5 * l2 * np.dot(w, w))
    residual = _sigmoid(z) - y
    grad_w = X.T @ residual / len(y) + l2 * w
    grad_b = float(np.mean(residual))
    return loss, np.concatenate([grad_w, [grad_b]])


@dataclass(frozen=True)
class FeatureScorerModel:
    """Trained logistic scorer: weights (bias last) over FEATURE_NAMES."""

    weights: np.ndarray
    feature_spec: tuple[str, ...] = FEATURE_NAMES
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(self.feature_spec) + 1,):
            raise ValidationError(
                "weight length mismatch",
                f"{w.shape} vs {len(self.feature_spec)} features plus bias",
            )
        if not np.all(np.isfinite(w)):
            raise ValidationError("non-finite weight")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def score(self, features: np.ndarray) -> float:
        """Log-odds for one feature vector."""
        return float(features @ self.weights[:-1] + self.weights[-1])


def train_feature_scorer(
    examples: list[PairExample],
    defs: dict | DefinitionStore | None = None,
    embeddings: EmbeddingTable | None = None,
    stopwords: frozenset[str] = frozenset(),
    lr: float = 0.4,
    epochs: int = 300,
    l2: float = 1e-4,
    seed: int = 0,
) -> FeatureScorerModel:
    """Fit the logistic feature scorer by full-batch gradient descent.

    ``defs`` may be a mapping from tree id to a ranked per-tree store (as
    built for pair generation) or a single store used for every pair.
    Initial weights are drawn from N(0, 0.1^2) with the given seed, so
    different seeds give different restarts on the same data.
    """
    if not examples:
        raise ValidationError("no training examples")
    labels = {e.label for e in examples}
    if labels != {0, 1}:
        raise ValidationError("degenerate label set", f"labels present: {sorted(labels)}")
    if lr <= 0 or epochs < 1 or l2 < 0:
        raise ValidationError(
            "invalid hyperparameters", f"lr={lr} epochs={epochs} l2={l2}"
        )

    per_tree = defs if isinstance(defs, dict) else None
    X = np.stack(
        [
            featurize(
                e.parent,
                e.child,
                per_tree.get(e.tree_id) if per_tree is not None else defs,
                embeddings,
                stopwords,
            )
            for e in examples
        ]
    )
    y = np.array([float(e.label) for e in examples])

    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, 0.1, size=len(FEATURE_NAMES) + 1)
    losses = []
    for _ in range(epochs):
        loss, grad = logistic_loss_grad(w, X, y, l2)
        losses.append(loss)
        w = w - lr * grad
    final_loss, _ = logistic_loss_grad(w, X, y, l2)
    losses.append(final_loss)
    meta = {
        "seed": seed,
        "lr": lr,
        "epochs": epochs,
        "l2": l2,
        "n_examples": len(examples),
        "final_loss": final_loss,
        "loss_curve": losses,
    }
    return FeatureScorerModel(weights=w, training_meta=meta)


def predict_matrix(
    model: FeatureScorerModel,
    term_set: TermSet,
    defs: DefinitionStore | None = None,
    embeddings: EmbeddingTable | None = None,
    stopwords: frozenset[str] = frozenset(),
) -> EdgeScoreMatrix:
    """Score every ordered pair of ``term_set`` with a trained model.

    A raw definition store is re-ranked against the term set first when
    embeddings are available, mirroring how training pairs are built.
    """
    if tuple(model.feature_spec) != FEATURE_NAMES:
        raise ValidationError(
            "feature spec mismatch", ",".join(model.feature_spec)
        )
    if defs is not None and embeddings is not None:
        defs = rerank_store(defs, term_set, embeddings, stopwords)
    n = len(term_set)
    scores = np.zeros((n, n), dtype=np.float64)
    for i, parent in enumerate(term_set.terms):
        for j, child in enumerate(term_set.terms):
            if i != j:
                scores[i, j] = model.score(
                    featurize(parent, child, defs, embeddings, stopwords)
                )
    return EdgeScoreMatrix(term_set.id, term_set.terms, scores)


def save_model(model: FeatureScorerModel, path) -> None:
    obj = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "feature_spec": list(model.feature_spec),
        "weights": [float(w) for w in model.weights],
        "training_meta": model.training_meta,
    }
    Path(path).write_text(dump_json(obj) + "\n", encoding="utf-8")


def load_model(path) -> FeatureScorerModel:
    obj = parse_json(Path(path).read_text(encoding="utf-8"), str(path))
    if not isinstance(obj, dict) or obj.get("format") != MODEL_FORMAT:
        raise ValidationError("unknown model format", str(path))
    if obj.get("version") != MODEL_VERSION:
        raise ValidationError("unsupported model version", str(obj.get("version")))
    spec = tuple(obj.get("feature_spec", ()))
    if spec != FEATURE_NAMES:
        raise ValidationError("feature spec mismatch", ",".join(spec))
    weights = obj.get("weights")
    if not isinstance(weights, list):
        raise ValidationError("malformed model file", str(path))
    return FeatureScorerModel(
        weights=np.array(weights, dtype=np.float64),
        feature_spec=spec,
        training_meta=obj.get("training_meta", {}),
    )
