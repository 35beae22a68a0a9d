"""Hot dynamic-programming kernels: edit distance and LCS length.

Both run in O(len(a) * len(b)) time but O(min) space, which is what makes
50k-character comparisons feasible.  The default path is numba-jitted;
set OMNIRAG_NO_NUMBA=1 to force the pure-numpy fallback (same results,
slower).  ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

_USE_NUMBA = os.environ.get("OMNIRAG_NO_NUMBA", "") not in ("1", "true", "yes")

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False
    _USE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap


@njit(cache=True)
def _levenshtein_jit(a: np.ndarray, b: np.ndarray) -> int:
    n, m = a.shape[0], b.shape[0]
    prev = np.arange(m + 1, dtype=np.int64)
    cur = np.empty(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ai == b[j - 1] else 1
            d = prev[j - 1] + cost
            if prev[j] + 1 < d:
                d = prev[j] + 1
            if cur[j - 1] + 1 < d:
                d = cur[j - 1] + 1
            cur[j] = d
        prev, cur = cur, prev
    return prev[m]


@njit(cache=True)
def _lcs_jit(a: np.ndarray, b: np.ndarray) -> int:
    n, m = a.shape[0], b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        ai = a[i - 1]
        for j in range(1, m + 1):
            if ai == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            elif prev[j] >= cur[j - 1]:
                cur[j] = prev[j]
            else:
                cur[j] = cur[j - 1]
        prev, cur = cur, prev
        cur[:] = 0
    return prev[m]


def _levenshtein_numpy(a: np.ndarray, b: np.ndarray) -> int:
    # Row recurrence with the insertion dependency resolved by a prefix-min:
    # cur[j] = j + min_{t<=j} (base[t] - t) where base folds match/delete.
    n, m = a.shape[0], b.shape[0]
    prev = np.arange(m + 1, dtype=np.int64)
    js = np.arange(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        cost = (a[i - 1] != b).astype(np.int64)
        base = np.empty(m + 1, dtype=np.int64)
        base[0] = i
        base[1:] = np.minimum(prev[:-1] + cost, prev[1:] + 1)
        prev = np.minimum.accumulate(base - js) + js
    return int(prev[m])


def _lcs_numpy(a: np.ndarray, b: np.ndarray) -> int:
    # cur[j] = max(cand[j], cur[j-1]) is a running max over the row.
    m = b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    for i in range(a.shape[0]):
        cand = np.empty(m + 1, dtype=np.int64)
        cand[0] = 0
        cand[1:] = np.maximum(prev[1:], prev[:-1] + (a[i] == b))
        prev = np.maximum.accumulate(cand)
    return int(prev[m])


def _encode_chars(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.int32).astype(np.int64)


def _encode_tokens(tokens: list[str], vocab: dict | None = None) -> np.ndarray:
    vocab = {} if vocab is None else vocab
    out = np.empty(len(tokens), dtype=np.int64)
    for i, t in enumerate(tokens):
        out[i] = vocab.setdefault(t, len(vocab))
    return out


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance between two strings (characters)."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    xa, xb = _encode_chars(a), _encode_chars(b)
    if _USE_NUMBA:
        return int(_levenshtein_jit(xa, xb))
    return _levenshtein_numpy(xa, xb)


def lcs_length(a: list[str], b: list[str]) -> int:
    """Longest common subsequence length between two token lists."""
    if not a or not b:
        return 0
    vocab: dict = {}
    xa = _encode_tokens(a, vocab)
    xb = _encode_tokens(b, vocab)
    if _USE_NUMBA:
        return int(_lcs_jit(xa, xb))
    return _lcs_numpy(xa, xb)
