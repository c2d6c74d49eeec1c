from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

from ..annotator import MARKER

PAD, BOS, EOS, UNK, TERM = "<pad>", "<s>", "</s>", "<unk>", MARKER
SPECIALS = (PAD, BOS, EOS, UNK, TERM)


class Vocab:
    """Token/id bijection. Ids 0-4 are PAD, BOS, EOS, UNK and the marker."""

    def __init__(self, tokens: Sequence[str]):
        if tuple(tokens[: len(SPECIALS)]) != SPECIALS:
            raise ValueError("vocabulary must start with the special tokens")
        self.itos = list(tokens)
        self.stoi = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate tokens in vocabulary")

    pad_id, bos_id, eos_id, unk_id, term_id = range(5)

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.itos == other.itos

    def encode(self, tokens: Iterable[str]) -> list[int]:
        get, unk = self.stoi.get, self.unk_id
        return [get(t, unk) for t in tokens]

    def decode(self, ids: Iterable[int], strip_special: bool = True) -> list[str]:
        out = []
        for i in ids:
            if strip_special and i in (self.pad_id, self.bos_id, self.eos_id):
                continue
            out.append(self.itos[i])
        return out


def build_vocab(corpus: Iterable, min_freq: int = 1) -> Vocab:
    """Tokens seen at least ``min_freq`` times, most frequent first, ties by token.

    ``corpus`` items are token lists or whitespace-separated strings.
    """
    counts: Counter = Counter()
    seen = False
    for item in corpus:
        seen = True
        counts.update(item.split() if isinstance(item, str) else item)
    if not seen or not counts:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted(
        (t for t, c in counts.items() if c >= min_freq and t not in SPECIALS),
        key=lambda t: (-counts[t], t),
    )
    return Vocab(list(SPECIALS) + kept)
