"""JSON checkpoints: config, vocabulary and every parameter tensor under its name."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import torch

from .network import ModelConfig, TermSeq2Seq
from .vocab import Vocab

FORMAT = "termdialog-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, model: TermSeq2Seq, vocab: Vocab, extra: dict | None = None) -> str:
    """Write the checkpoint and return its SHA-256."""
    params = {}
    for name, t in model.state_dict().items():
        params[name] = {"shape": list(t.shape), "dtype": str(t.dtype).removeprefix("torch."),
                        "data": t.detach().flatten().tolist()}
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "model_config": model.cfg.to_dict(),
        "vocab": vocab.itos,
        "extra": extra or {},
        "params": params,
    }
    data = json.dumps(doc, separators=(",", ":")).encode("utf-8")
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def load_checkpoint(path) -> tuple[TermSeq2Seq, Vocab, dict]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("format") != FORMAT:
        raise CheckpointError(f"{path} is not a {FORMAT} file")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')}")
    vocab = Vocab(doc["vocab"])
    cfg = ModelConfig(**doc["model_config"])
    model = TermSeq2Seq(len(vocab), cfg, vocab.pad_id)
    state = {}
    for name, entry in doc["params"].items():
        dtype = getattr(torch, entry["dtype"])
        state[name] = torch.tensor(entry["data"], dtype=dtype).reshape(entry["shape"])
    try:
        model.load_state_dict(state)
    except RuntimeError as exc:
        raise CheckpointError(f"checkpoint parameters do not match its config/vocab: {exc}") from exc
    model.to(next(iter(state.values())).dtype)
    model.eval()
    return model, vocab, doc.get("extra", {})
