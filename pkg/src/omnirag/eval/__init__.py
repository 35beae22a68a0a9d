from .kernels import lcs_length, levenshtein
from .metrics import (
    BenchmarkReport,
    BleuBreakdown,
    CerBreakdown,
    EmptyReference,
    PairReport,
    RougeBreakdown,
    bleu,
    cer,
    rouge_l,
    run_benchmark,
    score_pair,
    tokenize,
)

__all__ = [
    "BenchmarkReport",
    "BleuBreakdown",
    "CerBreakdown",
    "EmptyReference",
    "PairReport",
    "RougeBreakdown",
    "bleu",
    "cer",
    "lcs_length",
    "levenshtein",
    "rouge_l",
    "run_benchmark",
    "score_pair",
    "tokenize",
]
