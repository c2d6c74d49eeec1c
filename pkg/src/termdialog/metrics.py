"""Response evaluation: perplexity, BLEU, ROUGE, Distinct-n and distinct terminology."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from . import kernels
from .annotator import MARKER, annotate
from .lexicon import Lexicon

TABLE_COLUMNS = [
    "PPL", "B-1", "B-2", "B-3", "B-4", "R-1", "R-2", "R-L",
    "Dist-1", "Dist-2", "Dist-3", "Dist-4",
]

PPL_NOTE = "perplexity depends on the vocabulary; compare only across models sharing one"


class MetricError(ValueError):
    pass


def ngrams(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def perplexity(token_nlls: Sequence[float]) -> float:
    if len(token_nlls) == 0:
        raise MetricError("perplexity of an empty sequence")
    total = math.fsum(token_nlls)
    if not math.isfinite(total):
        raise MetricError("non-finite negative log-likelihood")
    return math.exp(total / len(token_nlls))


def bleu_n(candidates: Sequence[Sequence[str]], references: Sequence[Sequence[str]], n: int) -> float:
    """Corpus BLEU with uniform weights over orders 1..n, no smoothing."""
    if not 1 <= n <= 4:
        raise MetricError(f"BLEU order must be in 1..4, got {n}")
    if len(candidates) != len(references):
        raise MetricError("candidate/reference count mismatch")
    if not candidates:
        raise MetricError("empty corpus")
    matched = [0] * n
    total = [0] * n
    c_len = r_len = 0
    for cand, ref in zip(candidates, references):
        c_len += len(cand)
        r_len += len(ref)
        for k in range(1, n + 1):
            c_counts = ngrams(cand, k)
            r_counts = ngrams(ref, k)
            matched[k - 1] += sum(min(c, r_counts[g]) for g, c in c_counts.items())
            total[k - 1] += max(len(cand) - k + 1, 0)
    if c_len == 0 or any(m == 0 for m in matched):
        return 0.0
    log_p = math.fsum(math.log(m / t) for m, t in zip(matched, total)) / n
    bp = math.exp(min(0.0, 1.0 - r_len / c_len))
    return bp * math.exp(log_p)


def _f1(overlap: int, n_cand: int, n_ref: int) -> float:
    if overlap == 0:
        return 0.0
    p = overlap / n_cand
    r = overlap / n_ref
    return 2 * p * r / (p + r)


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> float:
    if n not in (1, 2):
        raise MetricError(f"ROUGE-n supports n in {{1, 2}}, got {n}")
    c = ngrams(candidate, n)
    r = ngrams(reference, n)
    overlap = sum((c & r).values())
    return _f1(overlap, sum(c.values()), sum(r.values()))


def _as_ids(a: Sequence[str], b: Sequence[str]) -> tuple[list[int], list[int]]:
    ids: dict = {}
    return [ids.setdefault(t, len(ids)) for t in a], [ids.setdefault(t, len(ids)) for t in b]


def lcs(a: Sequence[str], b: Sequence[str]) -> int:
    return kernels.lcs_length(*_as_ids(a, b))


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> float:
    return _f1(lcs(candidate, reference), len(candidate), len(reference))


def corpus_rouge(candidates, references, variant) -> float:
    if len(candidates) != len(references):
        raise MetricError("candidate/reference count mismatch")
    if not candidates:
        raise MetricError("empty corpus")
    if variant == "L":
        scores = [rouge_l(c, r) for c, r in zip(candidates, references)]
    else:
        scores = [rouge_n(c, r, variant) for c, r in zip(candidates, references)]
    return math.fsum(scores) / len(scores)


def distinct_n(responses: Sequence[Sequence[str]], n: int) -> float:
    """Unique n-grams over total n-grams, pooled across all responses."""
    counts: Counter = Counter()
    for r in responses:
        counts.update(ngrams(r, n))
    total = sum(counts.values())
    if total == 0:
        raise MetricError(f"no {n}-grams in the responses")
    return len(counts) / total


def distinct_terms(responses: Sequence[str], lex: Lexicon) -> tuple[int, set[str]]:
    found: set[str] = set()
    for text in responses:
        found.update(annotate(text, lex).phrases())
    return len(found), found


@dataclass
class MetricReport:
    ppl: float | None
    bleu: dict[int, float]
    rouge: dict[str, float]
    distinct: dict[int, float]
    distinct_term_count: int
    distinct_term_set: list[str] = field(default_factory=list)
    n_pairs: int = 0

    def columns(self) -> dict[str, float | None]:
        cols: dict[str, float | None] = {"PPL": self.ppl}
        cols.update({f"B-{n}": self.bleu[n] for n in range(1, 5)})
        cols.update({f"R-{k}": self.rouge[k] for k in ("1", "2", "L")})
        cols.update({f"Dist-{n}": self.distinct[n] for n in range(1, 5)})
        return cols

    def to_json(self) -> dict:
        out = dict(self.columns())
        out["distinct_terms"] = self.distinct_term_count
        out["distinct_term_set"] = sorted(self.distinct_term_set)
        out["n_pairs"] = self.n_pairs
        out["scale"] = {"PPL": "exp(mean nats)", "B": "[0,1]", "R": "[0,1]", "Dist": "[0,1]"}
        out["note"] = PPL_NOTE
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=False)

    def format_table(self, name: str = "model") -> str:
        """One row in the usual results-table layout; ROUGE shown x100."""
        cells = []
        for col, v in self.columns().items():
            if v is None:
                cells.append("-")
            elif col.startswith("R-"):
                cells.append(f"{100 * v:.4f}")
            else:
                cells.append(f"{v:.4f}")
        widths = [max(len(c), len(h)) for c, h in zip(cells, TABLE_COLUMNS)]
        name_w = max(len(name), len("Model"))
        head = "Model".ljust(name_w) + " | " + " ".join(h.rjust(w) for h, w in zip(TABLE_COLUMNS, widths))
        row = name.ljust(name_w) + " | " + " ".join(c.rjust(w) for c, w in zip(cells, widths))
        return f"{head}\n{row}\n"


def _clean(tokens) -> list[str]:
    if isinstance(tokens, str):
        tokens = tokens.split()
    return [t.lower() for t in tokens if t != MARKER]


def _safe_distinct(responses, n) -> float:
    try:
        return distinct_n(responses, n)
    except MetricError:
        return 0.0


def evaluate_run(candidates, references, token_nlls=None, lex: Lexicon | None = None) -> MetricReport:
    """Full report. Inputs may be strings or token lists; markers are stripped first."""
    cands = [_clean(c) for c in candidates]
    refs = [_clean(r) for r in references]
    if not cands:
        raise MetricError("nothing to evaluate")
    ppl = perplexity(token_nlls) if token_nlls is not None and len(token_nlls) else None
    n_terms, term_set = (0, set())
    if lex is not None:
        n_terms, term_set = distinct_terms([" ".join(c) for c in cands], lex)
    return MetricReport(
        ppl=ppl,
        bleu={n: bleu_n(cands, refs, n) for n in range(1, 5)},
        rouge={"1": corpus_rouge(cands, refs, 1), "2": corpus_rouge(cands, refs, 2),
               "L": corpus_rouge(cands, refs, "L")},
        distinct={n: _safe_distinct(cands, n) for n in range(1, 5)},
        distinct_term_count=n_terms,
        distinct_term_set=sorted(term_set),
        n_pairs=len(cands),
    )
