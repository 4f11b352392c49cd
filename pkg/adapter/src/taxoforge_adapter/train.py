"""Fine-tuning loop and model bundle serialization.

A saved bundle carries everything emission needs — weights, vocabulary,
mode, template, and the per-term context map — so ``emit`` runs from the
model file plus a list of trees, with no access to the training export.
"""
from __future__ import annotations

import pickle
import zipfile
from pathlib import Path

import numpy as np
import torch
from torch import nn

from . import data
from .config import AdapterConfig, AdapterError
from .model import PairClassifier

BUNDLE_FORMAT = "taxoforge-adapter-model"
BUNDLE_VERSION = 1


def _setup_determinism(seed: int) -> None:
    torch.manual_seed(seed)
    # Single-threaded CPU math keeps reduction order, and therefore saved
    # weights and emitted scores, identical across reruns with one seed.
    torch.set_num_threads(1)


def finetune(config: AdapterConfig, *, log=print) -> dict:
    """Train a pair classifier on an export file and save the bundle.

    Returns a summary dict with the final loss and training accuracy.
    """
    _setup_determinism(config.seed)
    records = data.read_pair_records(config.pairs_path)
    if config.mode == "closed-book":
        data.check_template(records, config.template)
    contexts = data.context_map(records) if config.mode == "open-book" else {}

    token_lists = []
    for r in records:
        if config.mode == "closed-book":
            token_lists.append(data.tokenize(r.hypothesis))
        else:
            token_lists.append(data.tokenize(r.parent_context))
            token_lists.append(data.tokenize(r.child_context))
    # Terms enter the vocabulary too: emission may meet a term whose
    # tokens never appeared in any training sequence.
    for r in records:
        token_lists.append(data.tokenize(r.parent))
        token_lists.append(data.tokenize(r.child))
    vocab = data.build_vocab(token_lists)

    encoded = [
        data.encode_record(r, config.mode, vocab, config.max_len) for r in records
    ]
    ids, segments, mask = data.pad_batch(encoded)
    labels = np.array([r.label for r in records], dtype=np.int64)

    ids_t = torch.from_numpy(ids)
    segments_t = torch.from_numpy(segments)
    mask_t = torch.from_numpy(mask)
    labels_t = torch.from_numpy(labels)

    model = PairClassifier(len(vocab), config.max_len, config.model_name)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    loss_fn = nn.CrossEntropyLoss()
    rng = np.random.default_rng(config.seed)

    n = len(records)
    model.train()
    final_loss = float("nan")
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            optimizer.zero_grad()
            logits = model(ids_t[batch], segments_t[batch], mask_t[batch])
            loss = loss_fn(logits, labels_t[batch])
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach()) * len(batch)
        final_loss = epoch_loss / n
        if epoch == 0 or (epoch + 1) % 50 == 0 or epoch == config.epochs - 1:
            log(f"epoch {epoch + 1}/{config.epochs} loss {final_loss:.6f}")

    model.eval()
    with torch.no_grad():
        predictions = model(ids_t, segments_t, mask_t).argmax(dim=1)
    accuracy = float((predictions == labels_t).float().mean())
    log(f"train accuracy {accuracy:.4f}")

    bundle = {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "mode": config.mode,
        "model_name": config.model_name,
        "max_len": config.max_len,
        "template": config.template,
        "vocab": vocab,
        "contexts": contexts,
        "state_dict": model.state_dict(),
    }
    Path(config.model_path).parent.mkdir(parents=True, exist_ok=True)
    torch.save(bundle, config.model_path)
    log(f"saved model to {config.model_path}")
    return {"loss": final_loss, "accuracy": accuracy, "n_examples": n}


def load_bundle(path) -> dict:
    """Load a saved model bundle and rebuild the classifier in eval mode."""
    try:
        bundle = torch.load(path, map_location="cpu", weights_only=False)
    except FileNotFoundError:
        raise
    except (RuntimeError, EOFError, pickle.UnpicklingError, zipfile.BadZipFile) as e:
        raise AdapterError("malformed model file", str(path)) from e
    if not isinstance(bundle, dict) or bundle.get("format") != BUNDLE_FORMAT:
        raise AdapterError("unknown model format", str(path))
    if bundle.get("version") != BUNDLE_VERSION:
        raise AdapterError("unsupported model version", str(bundle.get("version")))
    model = PairClassifier(
        len(bundle["vocab"]), bundle["max_len"], bundle["model_name"]
    )
    model.load_state_dict(bundle["state_dict"])
    model.eval()
    bundle["model"] = model
    return bundle
