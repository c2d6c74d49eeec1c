"""Seeded synthetic lexicons, sentences and dialogue dumps for fixtures and benchmarks."""

from __future__ import annotations

import json
import random
import string

MEDICAL_TERMS = [
    "infection", "spine", "fever", "cough", "antibiotics", "rash", "fracture", "migraine",
    "insulin", "diabetes", "asthma", "inhaler", "biopsy", "tumor", "ulcer", "nausea",
    "vomiting", "diarrhea", "allergy", "eczema", "physical", "exam", "swelling", "bruise",
    "tendon", "ligament", "cartilage", "vertebra", "kidney", "liver", "thyroid", "anemia",
    "hypertension", "ibuprofen", "acetaminophen", "x-ray", "ultrasound", "mri", "dermatitis",
    "sinusitis", "bronchitis", "pneumonia", "fatigue", "dizziness", "palpitations", "stent",
]

FILLER = [
    "there", "is", "on", "my", "hand", "the", "a", "it", "has", "been", "for", "two", "days",
    "and", "i", "feel", "bad", "what", "should", "do", "you", "can", "take", "please", "see",
    "your", "doctor", "soon", "brother", "said", "reminded", "him", "of", "when", "was", "young",
    "this", "morning", "after", "work", "very", "little", "not", "sure", "if", "maybe", "also",
]

PUNCT = [".", ",", "?", "!", ";"]


def random_word(rng: random.Random, lo: int = 3, hi: int = 10) -> str:
    return "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(lo, hi)))


def random_lexicon(rng: random.Random, size: int) -> list[str]:
    terms: set[str] = set(MEDICAL_TERMS)
    while len(terms) < size:
        terms.add(random_word(rng, 4, 12))
    return sorted(terms)


def random_sentence(rng: random.Random, terms, n_words: int, term_rate: float = 0.25,
                    punct_rate: float = 0.1) -> str:
    words = []
    for _ in range(n_words):
        w = rng.choice(terms) if rng.random() < term_rate else rng.choice(FILLER)
        if rng.random() < 0.1:
            w = w.capitalize()
        if rng.random() < punct_rate:
            w += rng.choice(PUNCT)
        words.append(w)
    return " ".join(words)


def random_dialogue(rng: random.Random, dialogue_id, terms, max_turns: int = 4) -> dict:
    """Alternating patient/doctor turns, always opening with the patient."""
    n = rng.randint(1, max_turns)
    utts = []
    for t in range(n):
        utts.append({"speaker": "patient", "text": random_sentence(rng, terms, rng.randint(3, 25))})
        utts.append({"speaker": "doctor", "text": random_sentence(rng, terms, rng.randint(3, 25))})
    return {"id": str(dialogue_id), "utterances": utts}


def write_raw_dump(path, n_dialogues: int, seed: int = 0, terms=None, max_turns: int = 1) -> None:
    rng = random.Random(seed)
    terms = terms or MEDICAL_TERMS
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n_dialogues):
            fh.write(json.dumps(random_dialogue(rng, f"d{i:05d}", terms, max_turns)) + "\n")


def term_pairs(rng: random.Random, n: int, terms=MEDICAL_TERMS, filler=FILLER,
               src_len=(4, 9), tgt_len=(3, 6)) -> list[tuple[str, str]]:
    """Short (question, answer) texts with lexicon terms mixed into filler words."""
    out = []
    for _ in range(n):
        src = random_sentence(rng, terms, rng.randint(*src_len), term_rate=0.35, punct_rate=0.0)
        tgt = random_sentence(rng, terms, rng.randint(*tgt_len), term_rate=0.35, punct_rate=0.0)
        out.append((src.lower(), tgt.lower()))
    return out
