"""Small synthetic corpora shared by the model and acceptance tests."""

import random

from termdialog.annotator import annotate_corpus
from termdialog.corpus import DialoguePair, Utterance
from termdialog.lexicon import Lexicon
from termdialog.model import build_vocab, encode_record, model_tokens
from termdialog.synthetic import MEDICAL_TERMS, term_pairs

LEX = Lexicon.from_terms(MEDICAL_TERMS)


def records(n, seed=0, **kw):
    rng = random.Random(seed)
    pairs = [DialoguePair(f"s{seed}-{i}", [Utterance("patient", s)], [Utterance("doctor", t)])
             for i, (s, t) in enumerate(term_pairs(rng, n, **kw))]
    return [a.to_record() for a in annotate_corpus(pairs, LEX)]


def vocab_for(*record_lists, min_freq=1):
    return build_vocab((t for recs in record_lists for r in recs for t in model_tokens(r)), min_freq)


def examples(recs, vocab, max_len=128):
    return [encode_record(r, vocab, max_len) for r in recs]
