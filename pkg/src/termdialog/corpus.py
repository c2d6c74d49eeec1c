"""Raw dialogue ingestion, filtering, splitting and corpus statistics."""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import kernels
from .lexicon import Lexicon

log = logging.getLogger(__name__)

SPEAKERS = ("patient", "doctor")


class CorpusConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Utterance:
    speaker: str
    text: str

    def __post_init__(self):
        if self.speaker not in SPEAKERS:
            raise ValueError(f"unknown speaker {self.speaker!r}")


@dataclass
class DialoguePair:
    id: str
    input_utterances: list[Utterance]
    target_utterances: list[Utterance]

    def __post_init__(self):
        if not self.target_utterances:
            raise ValueError(f"pair {self.id}: empty target")

    @property
    def src_text(self) -> str:
        return " ".join(u.text for u in self.input_utterances)

    @property
    def tgt_text(self) -> str:
        return " ".join(u.text for u in self.target_utterances)


@dataclass
class ParseReport:
    lines: int = 0
    dialogues: int = 0
    skipped: int = 0
    pairs: int = 0


def dialogue_to_pairs(dialogue_id: str, utterances: Sequence[Utterance]) -> list[DialoguePair]:
    """Each run of consecutive doctor turns after a patient turn becomes one target."""
    pairs = []
    i, n = 0, len(utterances)
    while i < n:
        if utterances[i].speaker == "doctor" and i > 0 and utterances[i - 1].speaker == "patient":
            j = i
            while j < n and utterances[j].speaker == "doctor":
                j += 1
            pairs.append(
                DialoguePair(f"{dialogue_id}-{len(pairs)}", list(utterances[:i]), list(utterances[i:j]))
            )
            i = j
        else:
            i += 1
    return pairs


def _parse_line(line: str) -> tuple[str, list[Utterance]]:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("not an object")
    did = obj["id"]
    if not isinstance(did, (str, int)):
        raise ValueError("bad id")
    turns = obj["utterances"]
    if not isinstance(turns, list):
        raise ValueError("utterances not a list")
    utts = []
    for t in turns:
        text = t["text"]
        if not isinstance(text, str):
            raise ValueError("text not a string")
        if text.strip():
            utts.append(Utterance(str(t["speaker"]).lower(), text.strip()))
    return str(did), utts


def parse_raw(path) -> tuple[list[DialoguePair], ParseReport]:
    """Read a raw dialogue dump (JSON lines of ``{id, utterances:[{speaker, text}]}``)."""
    report = ParseReport()
    pairs: list[DialoguePair] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            report.lines += 1
            try:
                did, utts = _parse_line(line)
            except (ValueError, KeyError, TypeError) as exc:
                log.debug("skipping line %d: %s", lineno, exc)
                report.skipped += 1
                continue
            report.dialogues += 1
            pairs.extend(dialogue_to_pairs(did, utts))
    report.pairs = len(pairs)
    if report.skipped:
        log.warning("%s: skipped %d malformed lines", path, report.skipped)
    return pairs, report


@dataclass
class FilterConfig:
    min_tokens: int = 2
    max_src_tokens: int = 512
    max_tgt_tokens: int = 512


def _n_tokens(text: str) -> int:
    return len(kernels.tokenize(text)[0])


def _n_words(text: str) -> int:
    return kernels.tokenize(text)[1].count(False)


def _keep_last_tokens(utt: Utterance, k: int) -> Utterance:
    surfaces = kernels.tokenize(utt.text)[0]
    return Utterance(utt.speaker, " ".join(surfaces[len(surfaces) - k:]))


def _keep_first_tokens(utts: Sequence[Utterance], k: int) -> list[Utterance]:
    out = []
    budget = k
    for u in utts:
        if budget <= 0:
            break
        surfaces = kernels.tokenize(u.text)[0]
        if len(surfaces) <= budget:
            out.append(u)
        else:
            out.append(Utterance(u.speaker, " ".join(surfaces[:budget])))
        budget -= len(surfaces)
    return out


def truncate_pair(pair: DialoguePair, cfg: FilterConfig) -> DialoguePair:
    src = list(pair.input_utterances)
    counts = [_n_tokens(u.text) for u in src]
    total = sum(counts)
    # oldest turns go first; the last (patient) turn is kept
    while total > cfg.max_src_tokens and len(src) > 1:
        total -= counts.pop(0)
        src.pop(0)
    if total > cfg.max_src_tokens:
        src = [_keep_last_tokens(src[0], cfg.max_src_tokens)]
    tgt = list(pair.target_utterances)
    if sum(_n_tokens(u.text) for u in tgt) > cfg.max_tgt_tokens:
        tgt = _keep_first_tokens(tgt, cfg.max_tgt_tokens)
    if src == pair.input_utterances and tgt == pair.target_utterances:
        return pair
    return DialoguePair(pair.id, src, tgt)


def filter_and_truncate(pairs: Iterable[DialoguePair], cfg: FilterConfig | None = None) -> list[DialoguePair]:
    cfg = cfg or FilterConfig()
    out = []
    for p in pairs:
        if _n_words(p.src_text) < cfg.min_tokens or _n_words(p.tgt_text) < cfg.min_tokens:
            continue
        out.append(truncate_pair(p, cfg))
    return out


def split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    _, r_val, r_test = ratios
    n_val = math.floor(n * r_val)
    n_test = math.floor(n * r_test)
    return n - n_val - n_test, n_val, n_test


def split(pairs: Sequence, ratios: Sequence[float] = (0.9, 0.05, 0.05), seed: int = 0):
    """Seeded shuffle, then cut. Val and test sizes are floors; train takes the rest."""
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusConfigError(f"split ratios must be three non-negative numbers summing to 1, got {ratios}")
    order = list(range(len(pairs)))
    random.Random(seed).shuffle(order)
    shuffled = [pairs[i] for i in order]
    n_train, n_val, _ = split_sizes(len(pairs), ratios)
    return (
        shuffled[:n_train],
        shuffled[n_train:n_train + n_val],
        shuffled[n_train + n_val:],
    )


@dataclass
class CorpusStats:
    n_dialogues: int = 0
    n_words: int = 0
    n_term_words: int = 0
    totals: dict = field(default_factory=lambda: {
        "words_in": 0, "utts_in": 0, "terms_in": 0,
        "words_out": 0, "utts_out": 0, "terms_out": 0,
    })

    def _avg(self, key: str) -> float:
        return self.totals[key] / self.n_dialogues if self.n_dialogues else 0.0

    avg_words_in = property(lambda self: self._avg("words_in"))
    avg_utts_in = property(lambda self: self._avg("utts_in"))
    avg_terms_in = property(lambda self: self._avg("terms_in"))
    avg_words_out = property(lambda self: self._avg("words_out"))
    avg_utts_out = property(lambda self: self._avg("utts_out"))
    avg_terms_out = property(lambda self: self._avg("terms_out"))

    def __add__(self, other: "CorpusStats") -> "CorpusStats":
        return CorpusStats(
            self.n_dialogues + other.n_dialogues,
            self.n_words + other.n_words,
            self.n_term_words + other.n_term_words,
            {k: self.totals[k] + other.totals[k] for k in self.totals},
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("words_in", "utts_in", "terms_in", "words_out", "utts_out", "terms_out"):
            d[f"avg_{name}"] = getattr(self, f"avg_{name}")
        return d


STATS_ROWS = [
    ("# Dialogues", "n_dialogues"),
    ("# Words", "n_words"),
    ("# Terms (words)", "n_term_words"),
    ("Avg. # Words in Input Text", "avg_words_in"),
    ("Avg. # Utterances in Input Text", "avg_utts_in"),
    ("Avg. # Terms in Input Text", "avg_terms_in"),
    ("Avg. # Words in Output Text", "avg_words_out"),
    ("Avg. # Utterances in Output Text", "avg_utts_out"),
    ("Avg. # Terms in Output Text", "avg_terms_out"),
]


def _side_counts(text: str, lex: Lexicon) -> tuple[int, int]:
    surfaces, punct = kernels.tokenize(text)
    mask = kernels.term_mask(surfaces, punct, lex.terms)
    return punct.count(False), sum(mask)


def compute_stats(pairs: Iterable[DialoguePair], lex: Lexicon) -> CorpusStats:
    """Word counts exclude punctuation; term words are tokens inside identified phrases."""
    stats = CorpusStats()
    t = stats.totals
    for p in pairs:
        w_in, k_in = _side_counts(p.src_text, lex)
        w_out, k_out = _side_counts(p.tgt_text, lex)
        stats.n_dialogues += 1
        t["words_in"] += w_in
        t["terms_in"] += k_in
        t["utts_in"] += len(p.input_utterances)
        t["words_out"] += w_out
        t["terms_out"] += k_out
        t["utts_out"] += len(p.target_utterances)
    stats.n_words = t["words_in"] + t["words_out"]
    stats.n_term_words = t["terms_in"] + t["terms_out"]
    return stats


def format_stats_table(columns: dict[str, CorpusStats]) -> str:
    """Aligned plain-text table, one column per split."""
    names = list(columns)
    label_w = max(len(label) for label, _ in STATS_ROWS)
    cells = []
    for label, attr in STATS_ROWS:
        row = []
        for name in names:
            v = getattr(columns[name], attr)
            row.append(f"{v:,}" if isinstance(v, int) else f"{v:.2f}")
        cells.append((label, row))
    col_w = [max(len(names[i]), *(len(r[i]) for _, r in cells)) for i in range(len(names))]
    lines = ["Datasets".ljust(label_w) + " | " + "  ".join(n.rjust(w) for n, w in zip(names, col_w))]
    lines.append("-" * len(lines[0]))
    for label, row in cells:
        lines.append(label.ljust(label_w) + " | " + "  ".join(c.rjust(w) for c, w in zip(row, col_w)))
    return "\n".join(lines) + "\n"


def pair_from_record(record: dict) -> DialoguePair:
    """Rebuild a single-utterance-per-side pair from an annotated record."""
    return DialoguePair(
        record["id"],
        [Utterance("patient", record["src_text"])],
        [Utterance("doctor", record["tgt_text"])],
    )
