"""Model construction, forward-pass behavior, and config validation."""

from __future__ import annotations

import pytest
import torch

from taxoforge_adapter import AdapterConfig, AdapterError, PairClassifier, log_odds


def _inputs(batch: int = 3, width: int = 7):
    torch.manual_seed(9)
    ids = torch.randint(4, 10, (batch, width))
    ids[:, 0] = 2
    segments = torch.zeros((batch, width), dtype=torch.long)
    mask = torch.zeros((batch, width), dtype=torch.bool)
    return ids, segments, mask


def test_forward_shape():
    model = PairClassifier(vocab_size=10, max_len=16)
    logits = model(*_inputs())
    assert logits.shape == (3, 2)
    assert torch.isfinite(logits).all()


def test_same_seed_same_weights():
    torch.manual_seed(4)
    first = PairClassifier(10, 16)
    torch.manual_seed(4)
    second = PairClassifier(10, 16)
    for key, value in first.state_dict().items():
        assert torch.equal(value, second.state_dict()[key]), key


def test_padding_does_not_change_logits():
    torch.manual_seed(2)
    model = PairClassifier(10, 16).eval()
    ids, segments, mask = _inputs(batch=1, width=5)
    with torch.no_grad():
        short = model(ids, segments, mask)
        pad = torch.zeros((1, 3), dtype=torch.long)
        long = model(
            torch.cat([ids, pad], dim=1),
            torch.cat([segments, pad], dim=1),
            torch.cat([mask, torch.ones((1, 3), dtype=torch.bool)], dim=1),
        )
    assert torch.allclose(short, long, atol=1e-5)


def test_segments_change_logits():
    torch.manual_seed(3)
    model = PairClassifier(10, 16).eval()
    ids, segments, mask = _inputs(batch=1, width=6)
    flipped = segments.clone()
    flipped[:, 3:] = 1
    with torch.no_grad():
        assert not torch.allclose(
            model(ids, segments, mask), model(ids, flipped, mask)
        )


def test_log_odds_is_logit_difference():
    logits = torch.tensor([[1.0, 3.5], [2.0, -1.0]])
    assert log_odds(logits).tolist() == [2.5, -3.0]


def test_unknown_preset_rejected():
    with pytest.raises(AdapterError, match="unknown model"):
        PairClassifier(10, 16, preset="roberta-large")


def test_config_validation():
    good = dict(pairs_path="p", model_path="m")
    AdapterConfig(**good)
    with pytest.raises(AdapterError, match="unknown mode"):
        AdapterConfig(**good, mode="open")
    with pytest.raises(AdapterError, match="unknown model"):
        AdapterConfig(**good, model_name="bert-base")
    with pytest.raises(AdapterError, match="invalid epochs"):
        AdapterConfig(**good, epochs=0)
    with pytest.raises(AdapterError, match="invalid learning rate"):
        AdapterConfig(**good, lr=0.0)
    with pytest.raises(AdapterError, match="malformed template"):
        AdapterConfig(**good, template="A {child} only.")
    with pytest.raises(AdapterError, match="max_len too small"):
        AdapterConfig(**good, max_len=4)
    with pytest.raises(AdapterError, match="invalid batch size"):
        AdapterConfig(**good, batch_size=0)


def test_unknown_model_error_names_presets():
    with pytest.raises(AdapterError, match="small, tiny"):
        AdapterConfig(pairs_path="p", model_path="m", model_name="nope")
