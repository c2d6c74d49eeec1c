"""Terminology annotation: tokenize, identify lexicon phrases, flatten with markers."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from . import kernels
from .lexicon import Lexicon

MARKER = "[TERM]"


class AnnotationError(ValueError):
    pass


class Token(NamedTuple):
    surface: str
    normalized: str
    is_punct: bool


class TermSpan(NamedTuple):
    start: int
    end: int  # exclusive


@dataclass
class AnnotatedSequence:
    tokens: list[Token]
    spans: list[TermSpan]
    flattened: list[str]
    labels: list[int]

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def flattened_text(self) -> str:
        return " ".join(self.flattened)

    def phrases(self) -> list[str]:
        """Normalized surface of every terminology phrase, in order."""
        return [
            " ".join(t.normalized for t in self.tokens[s.start:s.end]) for s in self.spans
        ]


def tokenize(text: str) -> list[Token]:
    surfaces, punct = kernels.tokenize(text)
    return [Token(s, s.lower(), p) for s, p in zip(surfaces, punct)]


def identify(tokens: Sequence[Token], lex: Lexicon) -> list[TermSpan]:
    """Mark lexicon matches and merge maximal adjacent runs into phrases.

    Punctuation tokens never match, so they break runs.
    """
    mask = kernels.term_mask(
        [t.surface for t in tokens], [t.is_punct for t in tokens], lex.terms
    )
    return [TermSpan(s, e) for s, e in kernels.merge_runs(mask)]


def _check_spans(spans: Sequence[tuple[int, int]], n: int) -> None:
    prev_end = 0
    for start, end in spans:
        if not (0 <= start < end <= n):
            raise AnnotationError(f"span ({start}, {end}) out of range for {n} tokens")
        if start < prev_end:
            raise AnnotationError(f"span ({start}, {end}) overlaps or is out of order")
        prev_end = end


def flatten(tokens: Sequence[Token], spans: Sequence[tuple[int, int]]) -> AnnotatedSequence:
    n = len(tokens)
    _check_spans(spans, n)
    labels = [0] * n
    flattened: list[str] = []
    pos = 0
    for start, end in spans:
        flattened.extend(t.surface for t in tokens[pos:start])
        flattened.append(MARKER)
        flattened.extend(t.surface for t in tokens[start:end])
        labels[start:end] = [1] * (end - start)
        pos = end
    flattened.extend(t.surface for t in tokens[pos:])
    return AnnotatedSequence(
        list(tokens), [TermSpan(s, e) for s, e in spans], flattened, labels
    )


def annotate(text: str, lex: Lexicon) -> AnnotatedSequence:
    if MARKER in text:
        raise AnnotationError(f"input already contains the marker {MARKER!r}")
    tokens = tokenize(text)
    return flatten(tokens, identify(tokens, lex))


def strip_markers(tokens: Iterable[str]) -> list[str]:
    return [t for t in tokens if t != MARKER]


@dataclass
class AnnotatedPair:
    id: str
    src_text: str
    tgt_text: str
    src: AnnotatedSequence
    tgt: AnnotatedSequence

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "src_text": self.src_text,
            "src_flattened": self.src.flattened_text,
            "src_labels": self.src.labels,
            "src_spans": [list(s) for s in self.src.spans],
            "tgt_text": self.tgt_text,
            "tgt_flattened": self.tgt.flattened_text,
            "tgt_labels": self.tgt.labels,
            "tgt_spans": [list(s) for s in self.tgt.spans],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), ensure_ascii=False)


def _annotate_pair(pair, lex: Lexicon) -> AnnotatedPair:
    src_text, tgt_text = pair.src_text, pair.tgt_text
    return AnnotatedPair(pair.id, src_text, tgt_text, annotate(src_text, lex), annotate(tgt_text, lex))


def annotate_corpus(pairs: Sequence, lex: Lexicon, threads: int = 1) -> list[AnnotatedPair]:
    """Annotate both sides of every pair. Output order always equals input order.

    ``pairs`` items need ``id``, ``src_text`` and ``tgt_text`` attributes.
    """
    if threads <= 1 or len(pairs) < 2:
        return [_annotate_pair(p, lex) for p in pairs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda p: _annotate_pair(p, lex), pairs))


def record_to_sequences(record: dict) -> tuple[list[str], list[int], list[str]]:
    """Source flattened tokens, per-flattened-position labels, target flattened tokens.

    Marker positions get label 1; whether they enter the loss is decided by
    the model's marker mask.
    """
    src = record["src_flattened"].split(" ") if record["src_flattened"] else []
    tgt = record["tgt_flattened"].split(" ") if record["tgt_flattened"] else []
    labels = []
    it = iter(record["src_labels"])
    for tok in src:
        labels.append(1 if tok == MARKER else next(it))
    return src, labels, tgt
