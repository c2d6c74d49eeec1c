"""Analytic gradients of the joint loss, checked against central finite differences."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import torch

from .data import Batch
from .network import TermSeq2Seq, compute_loss

# parameter-name prefix -> group label
GROUPS = {
    "embed.": "embeddings",
    "enc_pos.": "positional",
    "dec_pos.": "positional",
    "enc_norm.": "encoder",
    "encoder.": "encoder",
    "dec_norm.": "decoder",
    "decoder.": "decoder",
    "lm_head.": "lm_head",
    "classifier.": "classifier",
}


def group_of(name: str) -> str:
    for prefix, group in GROUPS.items():
        if name.startswith(prefix):
            return group
    return "other"


class NonFiniteLoss(ValueError):
    pass


@dataclass
class CoordCheck:
    name: str
    index: tuple
    analytic: float
    numeric: float

    @property
    def rel_error(self) -> float:
        return abs(self.analytic - self.numeric) / max(abs(self.analytic), 1e-8)


@dataclass
class GradReport:
    checks: list[CoordCheck] = field(default_factory=list)

    def by_group(self) -> dict[str, list[CoordCheck]]:
        out: dict[str, list[CoordCheck]] = {}
        for c in self.checks:
            out.setdefault(group_of(c.name), []).append(c)
        return out

    @property
    def max_rel_error(self) -> float:
        return max((c.rel_error for c in self.checks), default=0.0)


def joint_loss(model: TermSeq2Seq, batch: Batch, scale: float = 1.0) -> torch.Tensor:
    out = model(batch.src, batch.tgt_in)
    return scale * compute_loss(out, batch.tgt_out, batch.labels, batch.tgt_mask, batch.cls_mask).overall_loss


def gradients(model: TermSeq2Seq, batch: Batch, scale: float = 1.0) -> dict[str, torch.Tensor]:
    """Gradient of ``scale * overall_loss`` for every named parameter."""
    model.zero_grad()
    loss = joint_loss(model, batch, scale)
    if not torch.isfinite(loss):
        raise NonFiniteLoss(f"loss is {loss.item()}")
    loss.backward()
    return {
        n: (p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p))
        for n, p in model.named_parameters()
    }


@torch.no_grad()
def _numeric(model, batch, param, idx, step, scale) -> float:
    orig = param[idx].item()
    param[idx] = orig + step
    up = joint_loss(model, batch, scale).item()
    param[idx] = orig - step
    down = joint_loss(model, batch, scale).item()
    param[idx] = orig
    return (up - down) / (2 * step)


def backward_and_check(model: TermSeq2Seq, batch: Batch, per_group: int = 20, step: float = 1e-5,
                       seed: int = 0) -> tuple[dict[str, torch.Tensor], GradReport]:
    """Analytic gradients plus a finite-difference comparison at sampled coordinates.

    Run on a float64 model in eval mode; dropout would make the loss stochastic.
    """
    if model.training:
        raise ValueError("gradient check needs eval mode (no dropout)")
    grads = gradients(model, batch)
    rng = random.Random(seed)
    params = dict(model.named_parameters())
    names_by_group: dict[str, list[str]] = {}
    for n in params:
        names_by_group.setdefault(group_of(n), []).append(n)
    report = GradReport()
    for group, names in names_by_group.items():
        sizes = [params[n].numel() for n in names]
        for _ in range(per_group):
            pick = rng.randrange(sum(sizes))
            for n, size in zip(names, sizes):
                if pick < size:
                    break
                pick -= size
            p = params[n]
            idx = tuple(int(i) for i in torch.unravel_index(torch.tensor(pick), p.shape))
            report.checks.append(CoordCheck(n, idx, grads[n][idx].item(), _numeric(model, batch, p, idx, step, 1.0)))
    return grads, report


@torch.no_grad()
def randomize_parameters(model: TermSeq2Seq, std: float = 0.3, seed: int = 0) -> TermSeq2Seq:
    """Redraw every weight and bias from N(0, std); layer norms get N(1, std) gains.

    The training init (std 0.02) leaves many attention gradients below 1e-8,
    where finite-difference roundoff dominates any comparison.
    """
    gen = torch.Generator().manual_seed(seed)
    for name, p in model.named_parameters():
        noise = torch.randn(p.shape, generator=gen, dtype=torch.float64).to(p.dtype) * std
        p.copy_(noise + (1.0 if "norm" in name and name.endswith("weight") else 0.0))
    return model
