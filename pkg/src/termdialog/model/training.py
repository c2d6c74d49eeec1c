"""Joint-loss training, validation perplexity and checkpoint selection."""

from __future__ import annotations

import copy
import csv
import logging
import math
import random
from dataclasses import asdict, dataclass, field
from typing import Sequence

import torch

from .data import Batch, Example, collate
from .network import ModelConfig, TermSeq2Seq, compute_loss, token_nlls
from .vocab import Vocab

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    batch_size: int = 36
    learning_rate: float = 1e-4
    epochs: int = 10
    seed: int = 0
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    grad_clip: float = 1.0
    classify_on_markers: bool = False
    aux_loss: bool = True
    max_steps: int | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        self.betas = tuple(self.betas)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["betas"] = list(self.betas)
        return d


# full-size defaults live on TrainConfig (batch 36, lr 1e-4); presets shrink them for a CPU
DESK_TRAIN = dict(batch_size=8)
OVERFIT_TRAIN = dict(batch_size=10, learning_rate=1e-3, epochs=2000, max_steps=2000, grad_clip=1.0)
OVERFIT_MODEL = dict(dropout=0.0)


@dataclass
class HistoryRow:
    step: int
    epoch: int
    lm_loss: float
    classifier_loss: float
    overall_loss: float
    val_ppl: float | None = None


@dataclass
class TrainResult:
    model: TermSeq2Seq
    vocab: Vocab
    history: list[HistoryRow] = field(default_factory=list)
    best_val_ppl: float | None = None
    best_epoch: int | None = None

    def write_history(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "lm_loss", "classifier_loss", "overall_loss", "val_ppl"])
            for r in self.history:
                w.writerow([r.step, repr(r.lm_loss), repr(r.classifier_loss), repr(r.overall_loss),
                            "" if r.val_ppl is None else repr(r.val_ppl)])


def batches(examples: Sequence[Example], batch_size: int, rng: random.Random):
    order = list(range(len(examples)))
    rng.shuffle(order)
    for i in range(0, len(order), batch_size):
        yield [examples[j] for j in order[i:i + batch_size]]


@torch.no_grad()
def evaluate_nll(model: TermSeq2Seq, examples: Sequence[Example], vocab: Vocab,
                 batch_size: int = 32) -> list[list[float]]:
    """Teacher-forced per-token NLLs of the gold targets, one list per example."""
    was_training = model.training
    model.eval()
    out: list[list[float]] = []
    for i in range(0, len(examples), batch_size):
        b = collate(examples[i:i + batch_size], vocab)
        fwd = model(b.src, b.tgt_in)
        out.extend(token_nlls(fwd, b.tgt_out, b.tgt_mask))
    model.train(was_training)
    return out


def perplexity_of(model, examples, vocab) -> float:
    nlls = [x for row in evaluate_nll(model, examples, vocab) for x in row]
    return math.exp(math.fsum(nlls) / len(nlls))


@torch.no_grad()
def classifier_accuracy(model: TermSeq2Seq, examples: Sequence[Example], vocab: Vocab,
                        classify_on_markers: bool = False, batch_size: int = 32) -> float:
    was_training = model.training
    model.eval()
    correct = total = 0
    for i in range(0, len(examples), batch_size):
        b = collate(examples[i:i + batch_size], vocab, classify_on_markers)
        pred = model.classify(model.encode(b.src)) > 0
        hit = (pred == (b.labels > 0.5)) & b.cls_mask
        correct += int(hit.sum())
        total += int(b.cls_mask.sum())
    model.train(was_training)
    return correct / total if total else 1.0


def train_step(model, opt, batch: Batch, tcfg: TrainConfig):
    out = model(batch.src, batch.tgt_in)
    losses = compute_loss(out, batch.tgt_out, batch.labels, batch.tgt_mask, batch.cls_mask)
    objective = losses.overall_loss if tcfg.aux_loss else losses.lm_loss
    if not torch.isfinite(objective):
        raise TrainingDiverged(
            f"non-finite loss (lm={losses.lm_loss.item()}, classifier={losses.classifier_loss.item()})"
        )
    opt.zero_grad()
    objective.backward()
    if tcfg.grad_clip:
        torch.nn.utils.clip_grad_norm_(model.parameters(), tcfg.grad_clip)
    opt.step()
    return losses


def train(train_set: Sequence[Example], val_set: Sequence[Example], vocab: Vocab,
          tcfg: TrainConfig, mcfg: ModelConfig, dtype=torch.float32) -> TrainResult:
    """Adam on the joint loss; keeps the parameters with the best validation perplexity.

    Validation runs at the end of every epoch (and when ``max_steps`` cuts
    training short). With an empty ``val_set`` the final parameters are kept.
    """
    if not train_set:
        raise ValueError("empty training set")
    torch.manual_seed(tcfg.seed)
    model = TermSeq2Seq(len(vocab), mcfg, vocab.pad_id).to(dtype)
    opt = torch.optim.Adam(model.parameters(), lr=tcfg.learning_rate, betas=tcfg.betas, eps=tcfg.eps)
    result = TrainResult(model, vocab)
    best_state = None
    step = 0
    model.train()
    for epoch in range(tcfg.epochs):
        rng = random.Random(tcfg.seed * 1_000_003 + epoch)
        for chunk in batches(train_set, tcfg.batch_size, rng):
            batch = collate(chunk, vocab, tcfg.classify_on_markers)
            losses = train_step(model, opt, batch, tcfg)
            step += 1
            result.history.append(HistoryRow(
                step, epoch, losses.lm_loss.item(), losses.classifier_loss.item(), losses.overall_loss.item()
            ))
            if tcfg.max_steps and step >= tcfg.max_steps:
                break
        if val_set:
            ppl = perplexity_of(model, val_set, vocab)
            result.history[-1].val_ppl = ppl
            log.info("epoch %d step %d val_ppl %.4f", epoch, step, ppl)
            if result.best_val_ppl is None or ppl < result.best_val_ppl:
                result.best_val_ppl, result.best_epoch = ppl, epoch
                best_state = copy.deepcopy(model.state_dict())
        if tcfg.max_steps and step >= tcfg.max_steps:
            break
    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    return result


def fit_probe(model: TermSeq2Seq, examples: Sequence[Example], vocab: Vocab, steps: int = 300,
              lr: float = 1e-2, seed: int = 0, classify_on_markers: bool = False) -> TermSeq2Seq:
    """Train a fresh classifier head on frozen encoder features; returns a probed copy."""
    probe = copy.deepcopy(model)
    probe.eval()
    torch.manual_seed(seed)
    for p in probe.parameters():
        p.requires_grad_(False)
    for m in probe.classifier:
        if hasattr(m, "reset_parameters"):
            m.reset_parameters()
    for p in probe.classifier.parameters():
        p.requires_grad_(True)
    opt = torch.optim.Adam(probe.classifier.parameters(), lr=lr)
    b = collate(examples, vocab, classify_on_markers)
    with torch.no_grad():
        feats = probe.encode(b.src)
    m = b.cls_mask.to(feats.dtype)
    for _ in range(steps):
        logits = probe.classify(feats)
        loss = torch.nn.functional.binary_cross_entropy_with_logits(
            logits, b.labels.to(feats.dtype), reduction="none")
        loss = (loss * m).sum() / m.sum().clamp(min=1)
        opt.zero_grad()
        loss.backward()
        opt.step()
    return probe
