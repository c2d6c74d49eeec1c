from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import torch

from ..annotator import record_to_sequences
from .vocab import Vocab


@dataclass
class Example:
    id: str
    src_ids: list[int]  # ends with EOS
    labels: list[int]  # one per src position; EOS gets 0
    tgt_ids: list[int]  # no BOS/EOS


class Batch(NamedTuple):
    src: torch.Tensor
    tgt_in: torch.Tensor
    tgt_out: torch.Tensor
    tgt_mask: torch.Tensor
    labels: torch.Tensor
    cls_mask: torch.Tensor


def encode_record(record: dict, vocab: Vocab, max_len: int) -> Example:
    """Lowercased flattened tokens to ids. Source keeps its most recent tokens."""
    src, labels, tgt = record_to_sequences(record)
    src = [t.lower() if t != vocab.itos[vocab.term_id] else t for t in src]
    tgt = [t.lower() if t != vocab.itos[vocab.term_id] else t for t in tgt]
    keep = max_len - 1
    if len(src) > keep:
        src, labels = src[len(src) - keep:], labels[len(labels) - keep:]
    tgt = tgt[:keep]
    return Example(
        record["id"],
        vocab.encode(src) + [vocab.eos_id],
        list(labels) + [0],
        vocab.encode(tgt),
    )


def model_tokens(record: dict) -> list[list[str]]:
    """Token streams a vocabulary should be built from for one record."""
    src, _, tgt = record_to_sequences(record)
    return [[t.lower() if t != "[TERM]" else t for t in src], [t.lower() if t != "[TERM]" else t for t in tgt]]


def collate(examples: Sequence[Example], vocab: Vocab, classify_on_markers: bool = False) -> Batch:
    pad = vocab.pad_id
    b = len(examples)
    s = max(len(e.src_ids) for e in examples)
    t = max(len(e.tgt_ids) for e in examples) + 1
    src = torch.full((b, s), pad, dtype=torch.long)
    labels = torch.zeros((b, s))
    tgt_in = torch.full((b, t), pad, dtype=torch.long)
    tgt_out = torch.full((b, t), pad, dtype=torch.long)
    for i, e in enumerate(examples):
        src[i, : len(e.src_ids)] = torch.tensor(e.src_ids)
        labels[i, : len(e.labels)] = torch.tensor(e.labels, dtype=labels.dtype)
        n = len(e.tgt_ids)
        tgt_in[i, : n + 1] = torch.tensor([vocab.bos_id] + e.tgt_ids)
        tgt_out[i, : n + 1] = torch.tensor(e.tgt_ids + [vocab.eos_id])
    cls_mask = (src != pad) & (src != vocab.eos_id)
    if not classify_on_markers:
        cls_mask &= src != vocab.term_id
    return Batch(src, tgt_in, tgt_out, tgt_out != pad, labels, cls_mask)
