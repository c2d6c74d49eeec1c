"""Terminology-aware medical dialogue toolkit."""

from .kernels import BACKEND
from .lexicon import Lexicon, load_lexicon
from .annotator import MARKER, annotate, annotate_corpus, flatten, identify, tokenize

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Lexicon", "load_lexicon", "MARKER", "annotate", "annotate_corpus",
    "flatten", "identify", "tokenize",
]
