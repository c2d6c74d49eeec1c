"""Encoder-decoder with a language-model head and a per-token terminology classifier."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import torch
import torch.nn.functional as F
from torch import nn


@dataclass
class ModelConfig:
    d_model: int = 64
    n_heads: int = 4
    n_enc_layers: int = 2
    n_dec_layers: int = 2
    ffn_dim: int = 256
    max_len: int = 128
    dropout: float = 0.1

    def __post_init__(self):
        for name in ("d_model", "n_heads", "n_enc_layers", "n_dec_layers", "ffn_dim", "max_len"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


class ForwardOutput(NamedTuple):
    enc_features: torch.Tensor  # (B, S, d)
    dec_features: torch.Tensor  # (B, T, d)
    lm_logits: torch.Tensor  # (B, T, V)
    term_logits: torch.Tensor  # (B, S)

    @property
    def term_probs(self) -> torch.Tensor:
        return torch.sigmoid(self.term_logits)


class Attention(nn.Module):
    def __init__(self, d_model: int, n_heads: int, dropout: float):
        super().__init__()
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.q = nn.Linear(d_model, d_model)
        self.k = nn.Linear(d_model, d_model)
        self.v = nn.Linear(d_model, d_model)
        self.out = nn.Linear(d_model, d_model)
        self.drop = nn.Dropout(dropout)

    def _split(self, x):
        b, t, _ = x.shape
        return x.view(b, t, self.n_heads, self.d_head).transpose(1, 2)

    def forward(self, query, memory, keep):
        """``keep`` broadcasts to (B, heads, Tq, Tk); False entries are masked out."""
        q, k, v = self._split(self.q(query)), self._split(self.k(memory)), self._split(self.v(memory))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.d_head)
        scores = scores.masked_fill(~keep, -1e9)
        weights = self.drop(torch.softmax(scores, dim=-1))
        ctx = (weights @ v).transpose(1, 2).reshape(query.shape)
        return self.out(ctx)


class FeedForward(nn.Sequential):
    def __init__(self, d_model, ffn_dim, dropout):
        super().__init__(nn.Linear(d_model, ffn_dim), nn.GELU(), nn.Dropout(dropout), nn.Linear(ffn_dim, d_model))


class EncoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.attn = Attention(cfg.d_model, cfg.n_heads, cfg.dropout)
        self.ffn = FeedForward(cfg.d_model, cfg.ffn_dim, cfg.dropout)
        self.norm1 = nn.LayerNorm(cfg.d_model)
        self.norm2 = nn.LayerNorm(cfg.d_model)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x, keep):
        x = self.norm1(x + self.drop(self.attn(x, x, keep)))
        return self.norm2(x + self.drop(self.ffn(x)))


class DecoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.self_attn = Attention(cfg.d_model, cfg.n_heads, cfg.dropout)
        self.cross_attn = Attention(cfg.d_model, cfg.n_heads, cfg.dropout)
        self.ffn = FeedForward(cfg.d_model, cfg.ffn_dim, cfg.dropout)
        self.norm1 = nn.LayerNorm(cfg.d_model)
        self.norm2 = nn.LayerNorm(cfg.d_model)
        self.norm3 = nn.LayerNorm(cfg.d_model)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, y, memory, self_keep, cross_keep):
        y = self.norm1(y + self.drop(self.self_attn(y, y, self_keep)))
        y = self.norm2(y + self.drop(self.cross_attn(y, memory, cross_keep)))
        return self.norm3(y + self.drop(self.ffn(y)))


class TermSeq2Seq(nn.Module):
    """Post-norm transformer encoder-decoder.

    ``lm_head`` maps decoder features to vocabulary scores; ``classifier`` maps
    each encoder feature to one terminology logit (linear, tanh, linear).
    """

    def __init__(self, vocab_size: int, cfg: ModelConfig, pad_id: int = 0):
        super().__init__()
        self.cfg = cfg
        self.vocab_size = vocab_size
        self.pad_id = pad_id
        d = cfg.d_model
        self.embed = nn.Embedding(vocab_size, d, padding_idx=pad_id)
        self.enc_pos = nn.Embedding(cfg.max_len, d)
        self.dec_pos = nn.Embedding(cfg.max_len, d)
        self.enc_norm = nn.LayerNorm(d)
        self.dec_norm = nn.LayerNorm(d)
        self.encoder = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.n_enc_layers))
        self.decoder = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.n_dec_layers))
        self.drop = nn.Dropout(cfg.dropout)
        self.lm_head = nn.Linear(d, vocab_size)
        self.classifier = nn.Sequential(nn.Linear(d, d), nn.Tanh(), nn.Linear(d, 1))
        self._init()

    def _init(self):
        for name, p in self.named_parameters():
            if p.dim() > 1:
                nn.init.normal_(p, std=0.02)
            elif name.endswith("bias"):
                nn.init.zeros_(p)
        with torch.no_grad():
            self.embed.weight[self.pad_id].zero_()

    def _check_ids(self, ids: torch.Tensor, what: str):
        if ids.dim() != 2:
            raise ValueError(f"{what} must be (batch, length)")
        if ids.shape[1] > self.cfg.max_len:
            raise ValueError(f"{what} length {ids.shape[1]} exceeds max_len {self.cfg.max_len}")
        if ids.numel() and (ids.min() < 0 or ids.max() >= self.vocab_size):
            raise ValueError(f"{what} contains ids outside [0, {self.vocab_size})")

    def encode(self, src_ids: torch.Tensor) -> torch.Tensor:
        self._check_ids(src_ids, "src_ids")
        pos = torch.arange(src_ids.shape[1], device=src_ids.device)
        x = self.drop(self.enc_norm(self.embed(src_ids) + self.enc_pos(pos)))
        keep = (src_ids != self.pad_id)[:, None, None, :]
        for layer in self.encoder:
            x = layer(x, keep)
        return x

    def decode(self, tgt_ids: torch.Tensor, memory: torch.Tensor, src_ids: torch.Tensor) -> torch.Tensor:
        self._check_ids(tgt_ids, "tgt_ids")
        t = tgt_ids.shape[1]
        pos = torch.arange(t, device=tgt_ids.device)
        y = self.drop(self.dec_norm(self.embed(tgt_ids) + self.dec_pos(pos)))
        causal = torch.ones(t, t, dtype=torch.bool, device=tgt_ids.device).tril()
        self_keep = causal[None, None] & (tgt_ids != self.pad_id)[:, None, None, :]
        # a query always sees itself, so padded rows never go fully masked
        self_keep = self_keep | torch.eye(t, dtype=torch.bool, device=tgt_ids.device)[None, None]
        cross_keep = (src_ids != self.pad_id)[:, None, None, :]
        for layer in self.decoder:
            y = layer(y, memory, self_keep, cross_keep)
        return y

    def classify(self, enc_features: torch.Tensor) -> torch.Tensor:
        return self.classifier(enc_features).squeeze(-1)

    def forward(self, src_ids: torch.Tensor, tgt_ids: torch.Tensor) -> ForwardOutput:
        memory = self.encode(src_ids)
        dec = self.decode(tgt_ids, memory, src_ids)
        return ForwardOutput(memory, dec, self.lm_head(dec), self.classify(memory))


class LossBreakdown(NamedTuple):
    lm_loss: torch.Tensor
    classifier_loss: torch.Tensor
    overall_loss: torch.Tensor


def compute_loss(out: ForwardOutput, tgt_out: torch.Tensor, labels: torch.Tensor,
                 pad_mask: torch.Tensor, marker_mask: torch.Tensor) -> LossBreakdown:
    """Token-averaged LM cross entropy plus averaged BCE over classified positions.

    ``pad_mask`` is True on real target positions; ``marker_mask`` is True on
    source positions that enter the classifier loss.
    """
    if out.lm_logits.shape[:2] != tgt_out.shape or tgt_out.shape != pad_mask.shape:
        raise ValueError("target ids, pad mask and logits are misaligned")
    if out.term_logits.shape != labels.shape or labels.shape != marker_mask.shape:
        raise ValueError("labels, marker mask and source positions are misaligned")
    logp = torch.log_softmax(out.lm_logits, dim=-1)
    nll = -logp.gather(-1, tgt_out.unsqueeze(-1)).squeeze(-1)
    w = pad_mask.to(nll.dtype)
    lm_loss = (nll * w).sum() / w.sum().clamp(min=1)
    bce = F.binary_cross_entropy_with_logits(out.term_logits, labels.to(out.term_logits.dtype), reduction="none")
    m = marker_mask.to(bce.dtype)
    cls_loss = (bce * m).sum() / m.sum().clamp(min=1)
    return LossBreakdown(lm_loss, cls_loss, lm_loss + cls_loss)


def token_nlls(out: ForwardOutput, tgt_out: torch.Tensor, pad_mask: torch.Tensor) -> list[list[float]]:
    """Per-example lists of gold-token negative log-likelihoods (nats), pads dropped."""
    logp = torch.log_softmax(out.lm_logits.double(), dim=-1)
    nll = -logp.gather(-1, tgt_out.unsqueeze(-1)).squeeze(-1)
    return [row[mask].tolist() for row, mask in zip(nll, pad_mask)]
