"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module is used. Set ``TERMDIALOG_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("TERMDIALOG_PURE_PYTHON", "") not in ("", "0"):
    from ._purepy import lcs_length, merge_runs, term_mask, tokenize

    BACKEND = "python"
else:
    try:
        from ._speedups import lcs_length, merge_runs, term_mask, tokenize

        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._purepy import lcs_length, merge_runs, term_mask, tokenize

        BACKEND = "python"

__all__ = ["BACKEND", "lcs_length", "merge_runs", "term_mask", "tokenize"]
