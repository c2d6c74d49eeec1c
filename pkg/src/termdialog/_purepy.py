"""Pure-Python implementations of the hot kernels.

These are the reference versions. ``_speedups.pyx`` mirrors every function
here with the same signature and must return identical results.
"""

from __future__ import annotations


def tokenize(text: str) -> tuple[list[str], list[bool]]:
    """Whitespace split, then peel leading/trailing punctuation off each chunk.

    Every punctuation character peeled off becomes its own token. A chunk with
    no alphanumeric character is emitted one character per token.
    """
    surfaces: list[str] = []
    punct: list[bool] = []
    for chunk in text.split():
        n = len(chunk)
        i = 0
        while i < n and not chunk[i].isalnum():
            i += 1
        if i == n:
            for ch in chunk:
                surfaces.append(ch)
                punct.append(True)
            continue
        j = n
        while not chunk[j - 1].isalnum():
            j -= 1
        for ch in chunk[:i]:
            surfaces.append(ch)
            punct.append(True)
        surfaces.append(chunk[i:j])
        punct.append(False)
        for ch in chunk[j:]:
            surfaces.append(ch)
            punct.append(True)
    return surfaces, punct


def term_mask(surfaces: list[str], punct: list[bool], terms) -> list[int]:
    """1 where a word token is a lexicon match, else 0.

    Hyphenated tokens are looked up whole first; failing that, any
    hyphen-separated part that is a term makes the token a match.
    """
    out = []
    for surface, is_punct in zip(surfaces, punct):
        if is_punct:
            out.append(0)
            continue
        low = surface.lower()
        if low in terms:
            out.append(1)
        elif "-" in low:
            hit = 0
            for part in low.split("-"):
                if part and part in terms:
                    hit = 1
                    break
            out.append(hit)
        else:
            out.append(0)
    return out


def merge_runs(mask: list[int]) -> list[tuple[int, int]]:
    spans = []
    start = -1
    for i, m in enumerate(mask):
        if m:
            if start < 0:
                start = i
        elif start >= 0:
            spans.append((start, i))
            start = -1
    if start >= 0:
        spans.append((start, len(mask)))
    return spans


def lcs_length(a: list[int], b: list[int]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            if x == y:
                cur.append(prev[j] + 1)
            else:
                cur.append(cur[j] if cur[j] > prev[j + 1] else prev[j + 1])
        prev = cur
    return prev[-1]
