from __future__ import annotations

from typing import Sequence

import torch

from .network import TermSeq2Seq


@torch.no_grad()
def _next_logprobs(model: TermSeq2Seq, memory, src, prefixes: torch.Tensor) -> torch.Tensor:
    dec = model.decode(prefixes, memory.expand(len(prefixes), -1, -1), src.expand(len(prefixes), -1))
    return torch.log_softmax(model.lm_head(dec[:, -1]).double(), dim=-1)


@torch.no_grad()
def greedy(model: TermSeq2Seq, src_ids: Sequence[int], max_new: int, bos: int, eos: int) -> list[int]:
    if max_new <= 0:
        return []
    model.eval()
    src = torch.tensor([list(src_ids)])
    memory = model.encode(src)
    ys = [bos]
    limit = min(max_new, model.cfg.max_len - 1)
    for _ in range(limit):
        logp = _next_logprobs(model, memory, src, torch.tensor([ys]))[0]
        nxt = int(torch.argmax(logp))
        if nxt == eos:
            break
        ys.append(nxt)
    return ys[1:]


@torch.no_grad()
def beam_search(model: TermSeq2Seq, src_ids: Sequence[int], max_new: int, bos: int, eos: int,
                k: int = 4) -> list[int]:
    """Beam search scored by mean log-probability per generated token.

    At each step the k best extensions are kept; extensions ending in EOS
    leave the beam as finished hypotheses, so the beam can shrink.
    """
    if max_new <= 0:
        return []
    model.eval()
    src = torch.tensor([list(src_ids)])
    memory = model.encode(src)
    active: list[tuple[list[int], float]] = [([bos], 0.0)]
    finished: list[tuple[list[int], float]] = []
    limit = min(max_new, model.cfg.max_len - 1)
    for _ in range(limit):
        if not active:
            break
        logp = _next_logprobs(model, memory, src, torch.tensor([seq for seq, _ in active]))
        total = torch.tensor([score for _, score in active], dtype=logp.dtype)[:, None] + logp
        flat = total.flatten()
        top = torch.topk(flat, min(k, flat.numel()))
        vocab = logp.shape[1]
        nxt_active = []
        for score, idx in zip(top.values.tolist(), top.indices.tolist()):
            seq = active[idx // vocab][0]
            tok = idx % vocab
            if tok == eos:
                finished.append((seq + [eos], score))
            else:
                nxt_active.append((seq + [tok], score))
        active = nxt_active
    pool = finished + active

    def norm(item):
        seq, score = item
        return score / max(len(seq) - 1, 1)

    best = max(pool, key=norm)[0][1:]
    return best[:-1] if best and best[-1] == eos else best


def generate(model: TermSeq2Seq, src_ids: Sequence[int], max_new: int, bos: int, eos: int,
             strategy: str = "greedy", beam_size: int = 4) -> list[int]:
    if strategy == "greedy":
        return greedy(model, src_ids, max_new, bos, eos)
    if strategy == "beam":
        return beam_search(model, src_ids, max_new, bos, eos, beam_size)
    raise ValueError(f"unknown decoding strategy {strategy!r}")


@torch.no_grad()
def classify_terms(model: TermSeq2Seq, src_ids: Sequence[int]) -> list[float]:
    model.eval()
    src = torch.tensor([list(src_ids)])
    return torch.sigmoid(model.classify(model.encode(src)))[0].tolist()
