# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled versions of the kernels in ``_purepy``. Same signatures, same output."""

from libc.stdlib cimport malloc, free


cdef inline bint _isalnum(Py_UCS4 ch):
    return ch.isalnum()


def tokenize(str text):
    cdef list surfaces = []
    cdef list punct = []
    cdef str chunk
    cdef Py_ssize_t i, j, n, k
    for chunk in text.split():
        n = len(chunk)
        i = 0
        while i < n and not _isalnum(chunk[i]):
            i += 1
        if i == n:
            for k in range(n):
                surfaces.append(chunk[k])
                punct.append(True)
            continue
        j = n
        while not _isalnum(chunk[j - 1]):
            j -= 1
        for k in range(i):
            surfaces.append(chunk[k])
            punct.append(True)
        surfaces.append(chunk[i:j])
        punct.append(False)
        for k in range(j, n):
            surfaces.append(chunk[k])
            punct.append(True)
    return surfaces, punct


def term_mask(list surfaces, list punct, terms):
    cdef Py_ssize_t i, n = len(surfaces)
    cdef list out = [0] * n
    cdef str low, part
    for i in range(n):
        if punct[i]:
            continue
        low = (<str>surfaces[i]).lower()
        if low in terms:
            out[i] = 1
        elif "-" in low:
            for part in low.split("-"):
                if part and part in terms:
                    out[i] = 1
                    break
    return out


def merge_runs(list mask):
    cdef list spans = []
    cdef Py_ssize_t i, n = len(mask), start = -1
    for i in range(n):
        if mask[i]:
            if start < 0:
                start = i
        elif start >= 0:
            spans.append((start, i))
            start = -1
    if start >= 0:
        spans.append((start, n))
    return spans


def lcs_length(a, b):
    cdef Py_ssize_t n = len(a), m = len(b), i, j
    if n == 0 or m == 0:
        return 0
    cdef long *xa = <long *>malloc(n * sizeof(long))
    cdef long *xb = <long *>malloc(m * sizeof(long))
    cdef long *prev = <long *>malloc((m + 1) * sizeof(long))
    cdef long *cur = <long *>malloc((m + 1) * sizeof(long))
    cdef long *tmp
    cdef long result
    if not xa or not xb or not prev or not cur:
        free(xa); free(xb); free(prev); free(cur)
        raise MemoryError()
    try:
        for i in range(n):
            xa[i] = a[i]
        for j in range(m):
            xb[j] = b[j]
        for j in range(m + 1):
            prev[j] = 0
        for i in range(n):
            cur[0] = 0
            for j in range(m):
                if xa[i] == xb[j]:
                    cur[j + 1] = prev[j] + 1
                elif cur[j] > prev[j + 1]:
                    cur[j + 1] = cur[j]
                else:
                    cur[j + 1] = prev[j + 1]
            tmp = prev
            prev = cur
            cur = tmp
        result = prev[m]
    finally:
        free(xa); free(xb); free(prev); free(cur)
    return result
