"""Command line interface.

Exit codes: 0 on success, 1 when an input fails validation, 2 for usage
errors (argparse's own convention). All subcommands are deterministic for
a fixed seed: reruns write byte-identical artifacts.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import dataset as ds
from . import definitions as defs_mod
from . import evaluation as ev
from . import scoring as sc
from . import solver as sv
from .types import (
    Taxonomy,
    ValidationError,
    dump_json,
    dump_score_matrix,
    dump_taxonomy,
    load_score_matrix,
    load_taxonomy,
)

# Spreads per-tree oracle seeds apart; larger than any plausible tree count
# so (seed, tree index) pairs never collide across restarts.
_SEED_STRIDE = 1_000_003


def _load_corpus(path) -> ds.LoadedCorpus:
    return ds.load_corpus(ds.load_manifest(path))


def _split_or_die(corpus: ds.LoadedCorpus, name: str) -> ds.DatasetSplit:
    if name not in corpus.splits:
        raise ValidationError("unknown split", f"{name} not in {sorted(corpus.splits)}")
    return corpus.splits[name]


def _open_book_resources(corpus: ds.LoadedCorpus, open_book: bool, stopwords_path=None):
    """(defs, embeddings, stopwords) honoring the open/closed-book switch."""
    if open_book:
        if corpus.definitions is None or corpus.embeddings is None:
            raise ValidationError(
                "missing definitions",
                "open book needs definitions and embeddings in the manifest",
            )
        defs = corpus.definitions
    else:
        defs = None
    stopwords = corpus.stopwords
    if stopwords_path:
        stopwords = defs_mod.load_stopwords(stopwords_path)
    return defs, corpus.embeddings, stopwords


def _neg_policy(args) -> sc.NegativePolicy:
    if args.neg_policy == "all":
        return sc.AllNegatives()
    return sc.SampledNegatives(ratio=args.neg_ratio, seed=args.neg_seed)


def _feature_task(task):
    model, term_set, defs, embeddings, stopwords = task
    return sc.predict_matrix(model, term_set, defs, embeddings, stopwords)


def _oracle_task(task):
    tree, margin, sigma, seed = task
    return sc.oracle_scores(tree, margin, sigma, seed)


def _run_tasks(worker, tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks))


def _score_split(args, corpus, trees, restart_seed: int):
    """Score matrices for ``trees`` in order, per the selected scorer."""
    if args.scorer == "oracle":
        tasks = [
            (tree, args.margin, args.noise_sigma, restart_seed * _SEED_STRIDE + i)
            for i, tree in enumerate(trees)
        ]
        return _run_tasks(_oracle_task, tasks, args.jobs)
    if args.scorer == "external":
        by_id = {}
        for p in sorted(Path(args.matrices_dir).glob("*.json")):
            m = load_score_matrix(p)
            by_id[m.tree_id] = m
        out = []
        for tree in trees:
            if tree.id not in by_id:
                raise ValidationError("missing score matrix", tree.id)
            out.append(by_id[tree.id])
        return out
    # feature scorer: train on the train split, then score
    defs, embeddings, stopwords = _open_book_resources(
        corpus, args.open_book, getattr(args, "stopwords", None)
    )
    train_split = _split_or_die(corpus, args.train_split)
    examples = sc.generate_training_pairs(
        list(train_split.trees), defs, embeddings, stopwords, _neg_policy(args)
    )
    per_tree = sc.stores_by_tree(list(train_split.trees), defs, embeddings, stopwords)
    model = sc.train_feature_scorer(
        examples,
        per_tree or None,
        embeddings,
        stopwords,
        lr=args.lr,
        epochs=args.epochs,
        l2=args.l2,
        seed=restart_seed,
    )
    tasks = [(model, tree.term_set, defs, embeddings, stopwords) for tree in trees]
    return _run_tasks(_feature_task, tasks, args.jobs)


def _policy_for(args, matrix, gold: Taxonomy | None):
    if args.root_policy == "given":
        if gold is not None:
            return sv.GivenRoot(matrix.term_set().index_of(gold.term(gold.root)))
        if args.root is None:
            raise ValidationError("missing root", "policy 'given' needs --root")
        return sv.GivenRoot(matrix.term_set().index_of(args.root))
    if args.root_policy == "best":
        return sv.BestRoot()
    return sv.VirtualRoot(prior=args.virtual_prior, strict=args.strict)


def _macro_line(report: ev.EvalReport) -> str:
    return (
        f"macro P {report.macro_precision:.6f} "
        f"R {report.macro_recall:.6f} "
        f"F1 {report.macro_f1:.6f} (n_trees {report.n_trees})"
    )


# ---------------------------------------------------------------------------
# Subcommands


def cmd_validate(args) -> int:
    if args.scores:
        matrix = load_score_matrix(args.scores)
        print(f"ok: score matrix {matrix.tree_id} with {matrix.n} terms")
        return 0
    if args.trees:
        split = ds.load_dataset(args.trees)
        for tree in split.trees:
            for w in ds.check_profile(tree):
                print(f"warning: {tree.id}: {w}")
        print(f"ok: {len(split)} trees")
        return 0
    corpus = _load_corpus(args.corpus)
    for name, split in corpus.splits.items():
        for tree in split.trees:
            for w in ds.check_profile(tree):
                print(f"warning: {name}/{tree.id}: {w}")
    sizes = " ".join(f"{name}={len(split)}" for name, split in corpus.splits.items())
    print(f"ok: corpus {corpus.name} ({sizes})")
    return 0


def cmd_make_synthetic(args) -> int:
    spec = ds.SyntheticSpec(
        n_trees=args.n_trees,
        size_min=args.size_min,
        size_max=args.size_max,
        depth=args.depth,
        head_rate=args.head_rate,
        def_mention_rate=args.def_mention_rate,
        seed=args.seed,
    )
    corpus = ds.make_synthetic_corpus(spec)
    weights = _parse_weights(args.split_weights)
    manifest = ds.write_corpus(
        corpus, args.out, weights=weights, split_seed=args.split_seed, name=args.name
    )
    loaded = _load_corpus(manifest)
    sizes = " ".join(f"{n}={len(s)}" for n, s in loaded.splits.items())
    print(f"wrote corpus {args.name} ({sizes}) manifest {manifest}")
    return 0


def cmd_export_pairs(args) -> int:
    corpus = _load_corpus(args.corpus)
    split = _split_or_die(corpus, args.split)
    if not split.trees:
        raise ValidationError("empty split", f"{args.split}: nothing to export")
    defs, embeddings, stopwords = _open_book_resources(
        corpus, args.open_book, getattr(args, "stopwords", None)
    )
    examples = sc.generate_training_pairs(
        list(split.trees),
        defs,
        embeddings,
        stopwords,
        _neg_policy(args),
        template=args.template,
        max_defs=args.max_defs,
        max_chars=args.max_chars,
    )
    sc.write_pair_examples(args.out, examples)
    pos = sum(e.label for e in examples)
    print(f"wrote {len(examples)} pairs ({pos} positive, {len(examples) - pos} negative) to {args.out}")
    return 0


def cmd_train(args) -> int:
    corpus = _load_corpus(args.corpus)
    split = _split_or_die(corpus, args.split)
    defs, embeddings, stopwords = _open_book_resources(
        corpus, args.open_book, getattr(args, "stopwords", None)
    )
    trees = list(split.trees)
    examples = sc.generate_training_pairs(
        trees, defs, embeddings, stopwords, _neg_policy(args)
    )
    per_tree = sc.stores_by_tree(trees, defs, embeddings, stopwords)
    model = sc.train_feature_scorer(
        examples,
        per_tree or None,
        embeddings,
        stopwords,
        lr=args.lr,
        epochs=args.epochs,
        l2=args.l2,
        seed=args.seed,
    )
    sc.save_model(model, args.out)
    print(
        f"trained on {len(examples)} pairs, final loss "
        f"{model.training_meta['final_loss']:.6f}, wrote {args.out}"
    )
    return 0


def cmd_score(args) -> int:
    corpus = _load_corpus(args.corpus)
    split = _split_or_die(corpus, args.split)
    trees = list(split.trees)
    if args.scorer == "feature" and args.model:
        model = sc.load_model(args.model)
        defs, embeddings, stopwords = _open_book_resources(
        corpus, args.open_book, getattr(args, "stopwords", None)
    )
        tasks = [(model, t.term_set, defs, embeddings, stopwords) for t in trees]
        matrices = _run_tasks(_feature_task, tasks, args.jobs)
    else:
        matrices = _score_split(args, corpus, trees, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for m in matrices:
        dump_score_matrix(m, out / f"{m.tree_id}.json")
    print(f"wrote {len(matrices)} score matrices to {out}")
    return 0


def cmd_induce(args) -> int:
    matrix = load_score_matrix(args.scores)
    tree = sv.induce(matrix, _policy_for(args, matrix, None))
    if args.out:
        dump_taxonomy(tree, args.out)
        print(f"wrote {args.out}")
    else:
        print(dump_json(tree.to_obj()))
    return 0


def cmd_evaluate(args) -> int:
    pred = {t.id: t for t in ds.load_dataset(args.pred).trees}
    gold = {t.id: t for t in ds.load_dataset(args.gold).trees}
    if set(pred) != set(gold):
        raise ValidationError(
            "tree id mismatch",
            f"pred-only: {sorted(set(pred) - set(gold))[:3]} "
            f"gold-only: {sorted(set(gold) - set(pred))[:3]}",
        )
    pairs = [(pred[i], gold[i]) for i in sorted(gold)]
    report = ev.evaluate_set(pairs)
    if args.out:
        ev.dump_report(report, args.out)
    print(_macro_line(report))
    if args.harmonic_f1:
        print(f"harmonic-of-macro F1 {ev.harmonic_macro_f1(report):.6f}")
    return 0


def cmd_rank_defs(args) -> int:
    corpus = _load_corpus(args.corpus)
    split = _split_or_die(corpus, args.split)
    if corpus.definitions is None or corpus.embeddings is None:
        raise ValidationError(
            "missing definitions", "rank-defs needs definitions and embeddings"
        )
    lines = []
    for tree in split.trees:
        store = defs_mod.rerank_store(
            corpus.definitions, tree.term_set, corpus.embeddings, corpus.stopwords
        )
        for term in tree.term_set.terms:
            for rank, rec in enumerate(store.get(term)):
                lines.append(
                    dump_json(
                        {
                            "tree_id": tree.id,
                            "term": term,
                            "rank": rank,
                            "source": rec.source,
                            "text": rec.text,
                            "relevance": round(rec.relevance, 6),
                        }
                    )
                )
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} ranked definitions to {args.out}")
    return 0


def cmd_benchmark(args) -> int:
    corpus = _load_corpus(args.corpus)
    split = _split_or_die(corpus, args.eval_split)
    trees = list(split.trees)
    if args.scorer == "external" and args.restarts != 1:
        raise ValidationError(
            "invalid restarts", "external matrices are fixed; use --restarts 1"
        )
    reports = []
    for restart in range(args.restarts):
        restart_seed = args.seed + restart
        matrices = _score_split(args, corpus, trees, restart_seed)
        pairs = []
        for tree, matrix in zip(trees, matrices):
            predicted = sv.induce(matrix, _policy_for(args, matrix, tree))
            pairs.append((predicted, tree))
        reports.append(ev.evaluate_set(pairs))
    final = ev.aggregate_restarts(reports)
    if args.out:
        ev.dump_report(final, args.out)
    print(_macro_line(final))
    if args.harmonic_f1:
        print(f"harmonic-of-macro F1 {ev.harmonic_macro_f1(final):.6f}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _parse_weights(text: str) -> tuple[float, ...]:
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError as e:
        raise ValidationError("invalid split weights", text) from e
    return parts


def _add_neg_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--neg-policy", choices=["all", "sampled"], default="all")
    p.add_argument("--neg-ratio", type=int, default=5)
    p.add_argument("--neg-seed", type=int, default=0)


def _add_train_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lr", type=float, default=0.4)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--l2", type=float, default=1e-4)


def _add_policy_options(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--root-policy", choices=["given", "best", "virtual"], default="given"
    )
    p.add_argument("--root", help="root term for --root-policy given")
    p.add_argument("--virtual-prior", type=float, default=0.0)
    p.add_argument("--strict", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taxoforge",
        description="Taxonomy induction from pairwise parenthood scores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a corpus, tree file, or score matrix")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--corpus", help="corpus manifest path")
    group.add_argument("--trees", help="taxonomy JSONL path")
    group.add_argument("--scores", help="score matrix JSON path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("make-synthetic", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--name", default="synthetic")
    p.add_argument("--n-trees", type=int, default=140)
    p.add_argument("--size-min", type=int, default=10)
    p.add_argument("--size-max", type=int, default=50)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--head-rate", type=float, default=0.8)
    p.add_argument("--def-mention-rate", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-weights", default="533,114,114")
    p.add_argument("--split-seed", type=int, default=0)
    p.set_defaults(func=cmd_make_synthetic)

    p = sub.add_parser("export-pairs", help="write labeled pairs for external scorers")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--out", required=True)
    p.add_argument("--open-book", action="store_true")
    p.add_argument("--stopwords", help="override the corpus stopword list")
    p.add_argument("--template", default=sc.DEFAULT_TEMPLATE)
    p.add_argument("--max-defs", type=int, default=defs_mod.DEFAULT_MAX_DEFS)
    p.add_argument("--max-chars", type=int, default=defs_mod.DEFAULT_MAX_CHARS)
    _add_neg_options(p)
    p.set_defaults(func=cmd_export_pairs)

    p = sub.add_parser("train", help="train the logistic feature scorer")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default="train")
    p.add_argument("--out", required=True)
    p.add_argument("--open-book", action="store_true")
    p.add_argument("--stopwords", help="override the corpus stopword list")
    p.add_argument("--seed", type=int, default=0)
    _add_neg_options(p)
    _add_train_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="write score matrices for a split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--scorer", choices=["feature", "oracle"], default="feature")
    p.add_argument("--model", help="trained model file (feature scorer)")
    p.add_argument("--train-split", default="train")
    p.add_argument("--open-book", action="store_true")
    p.add_argument("--stopwords", help="override the corpus stopword list")
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    _add_neg_options(p)
    _add_train_options(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("induce", help="decode one score matrix into a taxonomy")
    p.add_argument("--scores", required=True)
    p.add_argument("--out")
    _add_policy_options(p)
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("evaluate", help="ancestor P/R/F1 of predicted trees vs gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out")
    p.add_argument("--harmonic-f1", action="store_true",
                   help="also print the harmonic mean of macro P and R")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("rank-defs", help="write re-ranked definitions for a split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank_defs)

    p = sub.add_parser("benchmark", help="score, induce, and evaluate a split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--scorer", choices=["feature", "oracle", "external"], default="feature")
    p.add_argument("--eval-split", default="test")
    p.add_argument("--train-split", default="train")
    p.add_argument("--matrices-dir", help="score matrices for --scorer external")
    p.add_argument("--open-book", action="store_true")
    p.add_argument("--stopwords", help="override the corpus stopword list")
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--harmonic-f1", action="store_true",
                   help="also print the harmonic mean of macro P and R")
    _add_neg_options(p)
    _add_train_options(p)
    _add_policy_options(p)
    p.set_defaults(func=cmd_benchmark)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "scorer", None) == "external" and not args.matrices_dir:
        parser.error("--scorer external requires --matrices-dir")
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
