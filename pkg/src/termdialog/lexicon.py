"""Medical terminology wordlist used for distant supervision."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable


class LexiconError(Exception):
    pass


class LexiconEncodingError(LexiconError):
    def __init__(self, path, lineno: int, reason: str):
        super().__init__(f"{path}:{lineno}: not valid UTF-8 ({reason})")
        self.path = path
        self.lineno = lineno


def normalize(token: str) -> str:
    return token.strip().lower()


@dataclass(frozen=True)
class Lexicon:
    """Immutable set of normalized single-word terms."""

    terms: frozenset
    source_path: str | None = field(default=None, compare=False)

    @classmethod
    def from_terms(cls, terms: Iterable[str], source_path=None) -> "Lexicon":
        return cls(frozenset(t for t in map(normalize, terms) if t), source_path)

    @property
    def size(self) -> int:
        return len(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, token: str) -> bool:
        return normalize(token) in self.terms

    def contains(self, token: str) -> bool:
        return normalize(token) in self.terms

    def matches(self, token: str) -> bool:
        """Token-level match used by the annotator (adds the hyphen rule)."""
        low = normalize(token)
        if low in self.terms:
            return True
        if "-" in low:
            return any(part in self.terms for part in low.split("-") if part)
        return False


def load_lexicon(path) -> Lexicon:
    """Read a one-term-per-line UTF-8 wordlist. ``#`` lines are comments."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise LexiconError(f"cannot read lexicon {path}: {exc}") from exc
    terms = set()
    for lineno, line in enumerate(raw.splitlines(), start=1):
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise LexiconEncodingError(path, lineno, exc.reason) from exc
        if lineno == 1:
            text = text.lstrip("﻿")
        term = normalize(text)
        if not term or term.startswith("#"):
            continue
        terms.add(term)
    return Lexicon(frozenset(terms), str(path))


def contains(lex: Lexicon, token: str) -> bool:
    return lex.contains(token)
