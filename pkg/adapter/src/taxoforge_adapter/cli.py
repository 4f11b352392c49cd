"""Command-line entry point: ``finetune`` and ``emit`` subcommands."""
from __future__ import annotations

import argparse
import sys

from .config import DEFAULT_TEMPLATE, MODEL_PRESETS, MODES, AdapterConfig, AdapterError
from .emit import DEFAULT_BATCH, emit_matrices
from .train import finetune, load_bundle


def cmd_finetune(args) -> int:
    config = AdapterConfig(
        pairs_path=args.pairs,
        model_path=args.out,
        mode=args.mode,
        model_name=args.model,
        max_len=args.max_len,
        epochs=args.epochs,
        lr=args.lr,
        batch_size=args.batch_size,
        seed=args.seed,
        template=args.template,
    )
    finetune(config)
    return 0


def cmd_emit(args) -> int:
    bundle = load_bundle(args.model)
    paths = emit_matrices(
        bundle, args.trees, args.out_dir, batch_size=args.batch_size
    )
    print(f"wrote {len(paths)} score matrices to {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taxoforge-adapter",
        description="transformer pair classifier over taxoforge pair exports",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("finetune", help="train a pair classifier on an export file")
    p.add_argument("--pairs", required=True, help="pair-export JSONL path")
    p.add_argument("--out", required=True, help="model bundle output path")
    p.add_argument("--mode", choices=MODES, default="closed-book")
    p.add_argument("--model", choices=sorted(MODEL_PRESETS), default="tiny")
    p.add_argument("--max-len", type=int, default=64)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--template", default=DEFAULT_TEMPLATE)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("emit", help="score every tree pair into matrix files")
    p.add_argument("--model", required=True, help="model bundle path")
    p.add_argument("--trees", required=True, help="taxonomy JSONL path (ids and terms)")
    p.add_argument("--out-dir", required=True, help="directory for matrix files")
    p.add_argument("--batch-size", type=int, default=DEFAULT_BATCH)
    p.set_defaults(func=cmd_emit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AdapterError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
