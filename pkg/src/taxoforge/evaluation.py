"""Ancestor-pair precision/recall/F1 and report aggregation.

A predicted tree is compared to gold through the transitive closure of
its edges: precision and recall over (ancestor, descendant) term pairs.
Per-tree scores are averaged arithmetically into macro scores, so the
macro F1 is the mean of per-tree F1 values, not the harmonic mean of the
macro precision and recall.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .solver import ancestor_pairs
from .types import Taxonomy, ValidationError, dump_json, parse_json


@dataclass(frozen=True)
class TreeScore:
    tree_id: str
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    """Per-tree and macro ancestor metrics for one evaluation run."""

    per_tree: tuple[TreeScore, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float

    @property
    def n_trees(self) -> int:
        return len(self.per_tree)


def _f1(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


def ancestor_prf(predicted: Taxonomy, gold: Taxonomy) -> tuple[float, float, float]:
    """Precision, recall and F1 of predicted ancestor pairs against gold.

    Empty pair sets follow fixed conventions instead of dividing by zero:
    an empty prediction has precision 0, and an empty gold set (a
    single-node tree) has recall 1 exactly when the prediction is empty
    too.
    """
    if set(predicted.term_set.terms) != set(gold.term_set.terms):
        raise ValidationError(
            "term mismatch", f"{predicted.id} vs {gold.id}"
        )
    pred = ancestor_pairs(predicted).pairs
    gold_pairs = ancestor_pairs(gold).pairs
    hits = len(pred & gold_pairs)
    precision = hits / len(pred) if pred else 0.0
    if gold_pairs:
        recall = hits / len(gold_pairs)
    else:
        recall = 1.0 if not pred else 0.0
    return precision, recall, _f1(precision, recall)


def evaluate_set(pairs: list[tuple[Taxonomy, Taxonomy]]) -> EvalReport:
    """Evaluate (predicted, gold) pairs; macro scores are per-tree means."""
    if not pairs:
        raise ValidationError("empty evaluation set")
    seen = set()
    scores = []
    for predicted, gold in pairs:
        if gold.id in seen:
            raise ValidationError("duplicate tree id", gold.id)
        seen.add(gold.id)
        p, r, f = ancestor_prf(predicted, gold)
        scores.append(TreeScore(gold.id, p, r, f))
    n = len(scores)
    return EvalReport(
        per_tree=tuple(scores),
        macro_precision=sum(s.precision for s in scores) / n,
        macro_recall=sum(s.recall for s in scores) / n,
        macro_f1=sum(s.f1 for s in scores) / n,
    )


def aggregate_restarts(reports: list[EvalReport]) -> EvalReport:
    """Mean report across restarts over one tree-id set.

    Per-tree metrics are averaged across restarts; macro metrics are then
    recomputed from the averaged per-tree values, which equals the mean of
    the restart macros up to float association.
    """
    if not reports:
        raise ValidationError("empty evaluation set", "no reports")
    ids = [s.tree_id for s in reports[0].per_tree]
    for rep in reports[1:]:
        if [s.tree_id for s in rep.per_tree] != ids:
            raise ValidationError("tree id mismatch", "restart reports differ")
    k = len(reports)
    merged = []
    for i, tree_id in enumerate(ids):
        merged.append(
            TreeScore(
                tree_id,
                sum(r.per_tree[i].precision for r in reports) / k,
                sum(r.per_tree[i].recall for r in reports) / k,
                sum(r.per_tree[i].f1 for r in reports) / k,
            )
        )
    n = len(merged)
    return EvalReport(
        per_tree=tuple(merged),
        macro_precision=sum(s.precision for s in merged) / n,
        macro_recall=sum(s.recall for s in merged) / n,
        macro_f1=sum(s.f1 for s in merged) / n,
    )


def harmonic_macro_f1(report: EvalReport) -> float:
    """Harmonic mean of the macro P and R, for comparison with macro F1.

    This is NOT the reported metric; it exists to show the gap between
    per-tree averaging and harmonic-of-macro aggregation.
    """
    return _f1(report.macro_precision, report.macro_recall)


def report_to_obj(report: EvalReport) -> dict:
    """JSON form with metrics rounded half-even to six decimals."""

    def r6(x: float) -> float:
        return round(x, 6)

    return {
        "macro": {
            "P": r6(report.macro_precision),
            "R": r6(report.macro_recall),
            "F1": r6(report.macro_f1),
        },
        "n_trees": report.n_trees,
        "per_tree": [
            {
                "id": s.tree_id,
                "P": r6(s.precision),
                "R": r6(s.recall),
                "F1": r6(s.f1),
            }
            for s in report.per_tree
        ],
    }


def report_from_obj(obj) -> EvalReport:
    try:
        per_tree = tuple(
            TreeScore(s["id"], s["P"], s["R"], s["F1"]) for s in obj["per_tree"]
        )
        report = EvalReport(
            per_tree=per_tree,
            macro_precision=obj["macro"]["P"],
            macro_recall=obj["macro"]["R"],
            macro_f1=obj["macro"]["F1"],
        )
        if obj["n_trees"] != report.n_trees:
            raise ValidationError("tree count mismatch", str(obj["n_trees"]))
    except (KeyError, TypeError) as e:
        raise ValidationError("malformed report", str(e)) from e
    return report


def load_report(path) -> EvalReport:
    return report_from_obj(parse_json(Path(path).read_text(encoding="utf-8"), str(path)))


def dump_report(report: EvalReport, path) -> None:
    Path(path).write_text(dump_json(report_to_obj(report)) + "\n", encoding="utf-8")
