"""Times the Cython kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--tokens 200000] [--repeat 3]
"""

import argparse
import random
import time

from termdialog import _purepy
from termdialog.synthetic import random_lexicon, random_sentence

try:
    from termdialog import _speedups
except ImportError:
    _speedups = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def workload(backend, texts, terms, seqs):
    def tok():
        for t in texts:
            backend.tokenize(t)

    tokenized = [_purepy.tokenize(t) for t in texts]
    masks = [_purepy.term_mask(s, p, terms) for s, p in tokenized]

    def mask():
        for s, p in tokenized:
            backend.term_mask(s, p, terms)

    def merge():
        for m in masks:
            backend.merge_runs(m)

    def lcs():
        for a, b in seqs:
            backend.lcs_length(a, b)

    def full():
        for t in texts:
            s, p = backend.tokenize(t)
            backend.merge_runs(backend.term_mask(s, p, terms))

    return {"tokenize": tok, "term_mask": mask, "merge_runs": merge, "lcs_length": lcs, "annotate": full}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--tokens", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = random.Random(0)
    vocab = random_lexicon(rng, 50_000)
    terms = frozenset(vocab)
    texts, n = [], 0
    while n < args.tokens:
        texts.append(random_sentence(rng, vocab, 60))
        n += 60
    seqs = [([rng.randrange(50) for _ in range(60)], [rng.randrange(50) for _ in range(60)]) for _ in range(2000)]

    backends = {"python": _purepy}
    if _speedups is not None:
        backends["cython"] = _speedups
    results = {name: {k: best_of(f, args.repeat) for k, f in workload(mod, texts, terms, seqs).items()}
               for name, mod in backends.items()}

    print(f"{'kernel':<12}" + "".join(f"{b:>12}" for b in results) + ("     speedup" if _speedups else ""))
    for kernel in results["python"]:
        row = f"{kernel:<12}" + "".join(f"{results[b][kernel]:>11.3f}s" for b in results)
        if _speedups is not None:
            row += f"{results['python'][kernel] / results['cython'][kernel]:>11.1f}x"
        print(row)
    if _speedups is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
