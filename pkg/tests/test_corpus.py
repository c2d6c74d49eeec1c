import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from termdialog import corpus
from termdialog.corpus import (
    CorpusConfigError, DialoguePair, FilterConfig, Utterance, compute_stats, filter_and_truncate,
    format_stats_table, parse_raw, split,
)
from termdialog.lexicon import Lexicon
from termdialog.synthetic import MEDICAL_TERMS, random_sentence
from oracles import oracle_tokenize


def P(text):
    return Utterance("patient", text)


def D(text):
    return Utterance("doctor", text)


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


def test_parse_single_exchange(tmp_path):
    p = tmp_path / "raw.jsonl"
    write_jsonl(p, [{"id": "a", "utterances": [{"speaker": "patient", "text": "hi"},
                                               {"speaker": "doctor", "text": "hello"}]}])
    pairs, report = parse_raw(p)
    assert len(pairs) == 1
    assert pairs[0].input_utterances == [P("hi")]
    assert pairs[0].target_utterances == [D("hello")]
    assert report.skipped == 0


def test_parse_two_doctor_turns(tmp_path):
    p = tmp_path / "raw.jsonl"
    turns = [("patient", "a"), ("doctor", "b"), ("patient", "c"), ("doctor", "d")]
    write_jsonl(p, [{"id": "x", "utterances": [{"speaker": s, "text": t} for s, t in turns]}])
    pairs, _ = parse_raw(p)
    assert len(pairs) == 2
    assert len(pairs[1].input_utterances) == 3
    assert pairs[1].input_utterances[-1].speaker == "patient"


def test_parse_skips_malformed(tmp_path):
    p = tmp_path / "raw.jsonl"
    p.write_text('{"id": "a", "utterances": [{"speaker": "patient", "text": "hi"}, {"speaker": "doctor", "text": "yo"}]}\n'
                 'not json\n{"id": "b"}\n{"id": "c", "utterances": [{"speaker": "nurse", "text": "x"}]}\n',
                 encoding="utf-8")
    pairs, report = parse_raw(p)
    assert len(pairs) == 1 and report.skipped == 3


def test_parse_unreadable(tmp_path):
    with pytest.raises(OSError):
        parse_raw(tmp_path / "missing.jsonl")


def test_parse_fixture_counts_doctor_turns(data_dir):
    expected = 0
    for line in (data_dir / "dialogues.jsonl").read_text(encoding="utf-8").splitlines():
        turns = json.loads(line)["utterances"]
        # a doctor turn opens a pair when the turn before it is the patient's
        expected += sum(1 for i, t in enumerate(turns)
                        if t["speaker"] == "doctor" and i > 0 and turns[i - 1]["speaker"] == "patient")
    pairs, report = parse_raw(data_dir / "dialogues.jsonl")
    assert len(pairs) == expected == report.pairs
    assert all(p.input_utterances[-1].speaker == "patient" for p in pairs)


def test_consecutive_doctor_turns_form_one_target():
    pairs = corpus.dialogue_to_pairs("z", [D("opening"), P("q"), D("a1"), D("a2"), P("q2")])
    assert len(pairs) == 1 and [u.text for u in pairs[0].target_utterances] == ["a1", "a2"]


def test_filter_drops_empty_target():
    pair = DialoguePair("1", [P("my head hurts")], [D("?")])
    assert filter_and_truncate([pair], FilterConfig(min_tokens=1)) == []


def test_truncation_keeps_recent_turns():
    old = P(" ".join(["old"] * 300))
    mid = D(" ".join(["mid"] * 200))
    last = P(" ".join(["new"] * 100))
    pair = DialoguePair("1", [old, mid, last], [D("ok fine")])
    (out,) = filter_and_truncate([pair], FilterConfig(max_src_tokens=512))
    assert len(oracle_tokenize(out.src_text)) <= 512
    assert out.input_utterances == [mid, last]


def test_truncation_cuts_oldest_tokens_of_single_turn():
    pair = DialoguePair("1", [P(" ".join(f"w{i}" for i in range(600)))], [D("ok fine")])
    (out,) = filter_and_truncate([pair], FilterConfig(max_src_tokens=512))
    words = out.src_text.split()
    assert len(words) == 512 and words[-1] == "w599" and words[0] == "w88"


def test_target_truncation():
    pair = DialoguePair("1", [P("a question")], [D(" ".join(["x"] * 10)), D("y y y")])
    (out,) = filter_and_truncate([pair], FilterConfig(max_tgt_tokens=12))
    assert out.tgt_text.split() == ["x"] * 10 + ["y", "y"]


def test_filter_matches_length_oracle():
    rng = random.Random(5)
    pairs = []
    for i in range(1000):
        src = " ".join(["w"] * rng.randint(0, 700))
        tgt = " ".join(["v"] * rng.randint(0, 10))
        pairs.append(DialoguePair(str(i), [P(src)], [D(tgt or ".")]))
    cfg = FilterConfig(min_tokens=3, max_src_tokens=512, max_tgt_tokens=5)
    out = filter_and_truncate(pairs, cfg)
    survivors = [p.id for p in pairs if len(p.src_text.split()) >= 3 and len(p.tgt_text.replace(".", "").split()) >= 3]
    assert [p.id for p in out] == survivors
    for p in out:
        assert len(p.src_text.split()) <= 512 and len(p.tgt_text.split()) <= 5


def _pairs(n):
    return [DialoguePair(f"p{i}", [P("q")], [D("a")]) for i in range(n)]


def test_split_sizes():
    tr, va, te = split(_pairs(1000), (0.9, 0.05, 0.05), seed=1)
    assert (len(tr), len(va), len(te)) == (900, 50, 50)


def test_split_remainder_to_train():
    n = 10_003
    expected_val = math.floor(n * 0.05)
    tr, va, te = split(_pairs(n), (0.9, 0.05, 0.05), seed=1)
    assert (len(tr), len(va), len(te)) == (n - 2 * expected_val, expected_val, expected_val)
    assert (len(tr), len(va), len(te)) == (9003, 500, 500)


def test_split_deterministic_and_exhaustive():
    ps = _pairs(321)
    a = split(ps, seed=9)
    b = split(ps, seed=9)
    assert [[p.id for p in part] for part in a] == [[p.id for p in part] for part in b]
    ids = [p.id for part in a for p in part]
    assert sorted(ids) == sorted(p.id for p in ps) and len(set(ids)) == len(ids)
    assert [p.id for p in split(ps, seed=10)[0]] != [p.id for p in a[0]]


def test_split_bad_ratios():
    with pytest.raises(CorpusConfigError):
        split(_pairs(5), (0.9, 0.05, 0.06))


def test_stats_hand_count():
    lex = Lexicon.from_terms(["infection"])
    s = compute_stats([DialoguePair("1", [P("there is infection on hand")], [D("ok")])], lex)
    assert s.totals["words_in"] == 5
    assert s.totals["terms_in"] == 1
    assert s.avg_utts_in == 1.0
    assert s.avg_words_in == 5.0


def test_stats_empty():
    s = compute_stats([], Lexicon.from_terms(["x"]))
    assert s.n_dialogues == s.n_words == s.n_term_words == 0
    assert s.avg_words_out == 0.0


def test_stats_punctuation_not_counted():
    s = compute_stats([DialoguePair("1", [P("fever, cough!")], [D("rest.")])], Lexicon.from_terms(["fever", "cough"]))
    assert s.totals["words_in"] == 2 and s.totals["terms_in"] == 2 and s.n_words == 3


@settings(max_examples=30)
@given(st.integers(0, 40), st.integers(0, 40), st.integers(0, 1000))
def test_stats_additive(na, nb, seed):
    rng = random.Random(seed)
    lex = Lexicon.from_terms(MEDICAL_TERMS)
    mk = lambda i: DialoguePair(str(i), [P(random_sentence(rng, MEDICAL_TERMS, 6))], [D(random_sentence(rng, MEDICAL_TERMS, 4))])
    a = [mk(i) for i in range(na)]
    b = [mk(i) for i in range(nb)]
    assert (compute_stats(a, lex) + compute_stats(b, lex)).to_dict() == compute_stats(a + b, lex).to_dict()


@settings(max_examples=50)
@given(st.lists(st.integers(1, 60), min_size=1, max_size=5), st.integers(1, 40))
def test_filter_never_grows_or_reorders(turn_lengths, limit):
    pairs = [DialoguePair(str(i), [P(" ".join(["w"] * n)) for n in turn_lengths], [D(" ".join(["v"] * (i + 1)))])
             for i in range(4)]
    out = filter_and_truncate(pairs, FilterConfig(min_tokens=1, max_src_tokens=limit, max_tgt_tokens=limit))
    assert [p.id for p in out] == [p.id for p in pairs]
    for before, after in zip(pairs, out):
        assert len(after.src_text.split()) <= len(before.src_text.split())
        assert len(after.tgt_text.split()) <= len(before.tgt_text.split())


def test_table_rows_match_layout():
    table = format_stats_table({"Train": corpus.CorpusStats()})
    labels = [line.split(" | ")[0].strip() for line in table.splitlines()[2:]]
    assert labels == [
        "# Dialogues", "# Words", "# Terms (words)",
        "Avg. # Words in Input Text", "Avg. # Utterances in Input Text", "Avg. # Terms in Input Text",
        "Avg. # Words in Output Text", "Avg. # Utterances in Output Text", "Avg. # Terms in Output Text",
    ]
