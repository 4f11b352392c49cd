"""Transformer pair-classifier bridge for the taxonomy toolkit.

The adapter exchanges files with the toolkit and nothing else: it
fine-tunes on pair-export JSONL, then emits score-matrix JSON that
``taxoforge induce`` and ``taxoforge benchmark --scorer external``
consume directly.
"""
from .config import DEFAULT_TEMPLATE, MODEL_PRESETS, MODES, AdapterConfig, AdapterError
from .data import (
    PairRecord,
    build_vocab,
    context_map,
    encode_pair,
    encode_record,
    encode_single,
    pad_batch,
    read_pair_records,
    read_tree_terms,
    tokenize,
    write_score_matrix,
)
from .emit import emit_matrices, score_tree
from .model import PairClassifier, log_odds
from .train import finetune, load_bundle

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "DEFAULT_TEMPLATE",
    "MODEL_PRESETS",
    "MODES",
    "PairClassifier",
    "PairRecord",
    "build_vocab",
    "context_map",
    "emit_matrices",
    "encode_pair",
    "encode_record",
    "encode_single",
    "finetune",
    "load_bundle",
    "log_odds",
    "pad_batch",
    "read_pair_records",
    "read_tree_terms",
    "score_tree",
    "tokenize",
    "write_score_matrix",
]
