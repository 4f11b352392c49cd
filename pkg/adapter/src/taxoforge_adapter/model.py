"""A small transformer encoder with a two-way classification head.

No pretrained checkpoints ship with the package, so the encoder trains
from random initialization; the architecture keeps the standard layout
(token + position + segment embeddings, pre-norm self-attention stack,
classification off the ``[CLS]`` position) so a hub-hosted checkpoint
could be swapped in without touching the callers.
"""
from __future__ import annotations

import torch
from torch import nn

from .config import MODEL_PRESETS, AdapterError


class PairClassifier(nn.Module):
    """Binary classifier over token sequences; logits[1] means "is-a"."""

    def __init__(self, vocab_size: int, max_len: int, preset: str = "tiny"):
        super().__init__()
        if preset not in MODEL_PRESETS:
            raise AdapterError("unknown model", repr(preset))
        spec = MODEL_PRESETS[preset]
        d = spec["d_model"]
        self.preset = preset
        self.max_len = max_len
        self.token_emb = nn.Embedding(vocab_size, d, padding_idx=0)
        self.pos_emb = nn.Embedding(max_len, d)
        self.seg_emb = nn.Embedding(2, d)
        layer = nn.TransformerEncoderLayer(
            d_model=d,
            nhead=spec["n_heads"],
            dim_feedforward=spec["d_ff"],
            dropout=0.0,
            batch_first=True,
            norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(
            layer, num_layers=spec["n_layers"], enable_nested_tensor=False
        )
        self.norm = nn.LayerNorm(d)
        self.head = nn.Linear(d, 2)

    def forward(
        self,
        ids: torch.Tensor,
        segments: torch.Tensor,
        padding_mask: torch.Tensor,
    ) -> torch.Tensor:
        """Logits of shape (batch, 2) from the ``[CLS]`` position."""
        positions = torch.arange(ids.shape[1], device=ids.device)
        x = self.token_emb(ids) + self.pos_emb(positions) + self.seg_emb(segments)
        x = self.encoder(x, src_key_padding_mask=padding_mask)
        return self.head(self.norm(x[:, 0]))


def log_odds(logits: torch.Tensor) -> torch.Tensor:
    """Parenthood score: difference of class logits, positive means "is-a"."""
    return logits[:, 1] - logits[:, 0]
