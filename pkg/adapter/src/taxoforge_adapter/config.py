"""Run configuration for fine-tuning and matrix emission.

The adapter talks to the taxonomy toolkit only through files: it reads
the pair-export JSONL format and the taxonomy JSONL format, and writes
the score-matrix JSON format. Everything else (model size, sequence
length, optimizer settings) lives here.
"""
from __future__ import annotations

from dataclasses import dataclass


class AdapterError(ValueError):
    """An input violated a structural rule; ``rule`` names the rule."""

    def __init__(self, rule: str, detail: str = ""):
        self.rule = rule
        super().__init__(f"{rule} ({detail})" if detail else rule)


MODES = ("closed-book", "open-book")

# Matches the pair-export convention: hypotheses are rendered from this
# template with canonical (lowercase, space-separated) terms.
DEFAULT_TEMPLATE = "A {child} is a {parent}."

# Architecture presets for the built-in encoder. Pretrained checkpoints
# are not bundled; both presets train from random initialization.
MODEL_PRESETS = {
    "tiny": {"d_model": 64, "n_heads": 4, "n_layers": 2, "d_ff": 128},
    "small": {"d_model": 128, "n_heads": 4, "n_layers": 4, "d_ff": 256},
}


@dataclass(frozen=True)
class AdapterConfig:
    """Everything a fine-tuning run needs, validated eagerly."""

    pairs_path: str
    model_path: str
    mode: str = "closed-book"
    model_name: str = "tiny"
    max_len: int = 64
    epochs: int = 200
    lr: float = 1e-3
    batch_size: int = 64
    seed: int = 0
    template: str = DEFAULT_TEMPLATE

    def __post_init__(self):
        if self.mode not in MODES:
            raise AdapterError("unknown mode", self.mode)
        if self.model_name not in MODEL_PRESETS:
            available = ", ".join(sorted(MODEL_PRESETS))
            raise AdapterError(
                "unknown model",
                f"{self.model_name!r}: available presets are {available}",
            )
        if self.max_len < 8:
            raise AdapterError("max_len too small", str(self.max_len))
        if self.epochs < 1:
            raise AdapterError("invalid epochs", str(self.epochs))
        if self.lr <= 0:
            raise AdapterError("invalid learning rate", str(self.lr))
        if self.batch_size < 1:
            raise AdapterError("invalid batch size", str(self.batch_size))
        if "{parent}" not in self.template or "{child}" not in self.template:
            raise AdapterError("malformed template", self.template)
