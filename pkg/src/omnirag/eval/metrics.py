"""Extraction-fidelity metrics: BLEU, ROUGE-L, and character error rate.

Tokenization is Unicode-whitespace splitting, case-sensitive, no
stemming; every score comes back with its intermediate quantities so a
report can show where a number came from.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .kernels import lcs_length, levenshtein

BLEU_MAX_ORDER = 4


class EmptyReference(ValueError):
    """The reference text is empty; the metric is undefined."""


def tokenize(text: str) -> list[str]:
    return text.split()


@dataclass(frozen=True)
class BleuBreakdown:
    bleu: float
    bp: float
    precisions: tuple[float, ...]
    candidate_len: int
    reference_len: int
    empty_candidate: bool = False


@dataclass(frozen=True)
class RougeBreakdown:
    f: float
    lcs: int
    precision: float
    recall: float
    beta: float = 1.0


@dataclass(frozen=True)
class CerBreakdown:
    cer: float
    distance: int
    ref_len: int


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: list[str], reference: list[str]) -> BleuBreakdown:
    """BLEU with N=4, uniform weights, and no smoothing.

    Any order with zero clipped precision zeroes the whole score.  The
    brevity penalty is exp(1 - r/c) when the candidate is not longer
    than the reference, else 1.
    """
    if not reference:
        raise EmptyReference("BLEU is undefined for an empty reference")
    c, r = len(candidate), len(reference)
    if not candidate:
        return BleuBreakdown(0.0, 0.0, (0.0,) * BLEU_MAX_ORDER, 0, r, empty_candidate=True)

    precisions = []
    for n in range(1, BLEU_MAX_ORDER + 1):
        cand_counts = _ngram_counts(candidate, n)
        total = sum(cand_counts.values())
        if total == 0:
            precisions.append(0.0)
            continue
        ref_counts = _ngram_counts(reference, n)
        clipped = sum(min(cnt, ref_counts.get(g, 0)) for g, cnt in cand_counts.items())
        precisions.append(clipped / total)

    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    if any(p == 0.0 for p in precisions):
        score = 0.0
    else:
        w = 1.0 / BLEU_MAX_ORDER
        score = bp * math.exp(sum(w * math.log(p) for p in precisions))
    return BleuBreakdown(score, bp, tuple(precisions), c, r)


def rouge_l(candidate: list[str], reference: list[str]) -> RougeBreakdown:
    """ROUGE-L F-measure over the token-level LCS, beta = 1."""
    if not reference:
        raise EmptyReference("ROUGE-L is undefined for an empty reference")
    if not candidate:
        return RougeBreakdown(0.0, 0, 0.0, 0.0)
    lcs = lcs_length(candidate, reference)
    if lcs == 0:
        return RougeBreakdown(0.0, 0, 0.0, 0.0)
    p = lcs / len(candidate)
    r = lcs / len(reference)
    f = 2.0 * p * r / (p + r)
    return RougeBreakdown(f, lcs, p, r)


def cer(candidate: str, reference: str) -> CerBreakdown:
    """Edit distance normalized by the reference length; may exceed 1."""
    if not reference:
        raise EmptyReference("CER is undefined for an empty reference")
    d = levenshtein(candidate, reference)
    return CerBreakdown(d / len(reference), d, len(reference))


@dataclass
class PairReport:
    extracted_path: str
    truth_path: str
    error: str = ""
    bleu: BleuBreakdown | None = None
    rouge: RougeBreakdown | None = None
    cer: CerBreakdown | None = None

    def to_dict(self) -> dict:
        out: dict = {"extracted": self.extracted_path, "truth": self.truth_path}
        if self.error:
            out["error"] = self.error
            return out
        assert self.bleu and self.rouge and self.cer
        out.update(
            bleu=self.bleu.bleu,
            bp=self.bleu.bp,
            precisions=list(self.bleu.precisions),
            candidate_len=self.bleu.candidate_len,
            reference_len=self.bleu.reference_len,
            rouge_l=self.rouge.f,
            lcs=self.rouge.lcs,
            rouge_precision=self.rouge.precision,
            rouge_recall=self.rouge.recall,
            cer=self.cer.cer,
            edit_distance=self.cer.distance,
            ref_chars=self.cer.ref_len,
        )
        return out


@dataclass
class BenchmarkReport:
    pairs: list[PairReport] = field(default_factory=list)

    @property
    def scored(self) -> list[PairReport]:
        return [p for p in self.pairs if not p.error]

    def table(self) -> str:
        header = f"{'extracted':<40} {'BLEU':>8} {'ROUGE-L':>8} {'CER':>8}"
        lines = [header, "-" * len(header)]
        for p in self.pairs:
            name = p.extracted_path[-40:]
            if p.error:
                lines.append(f"{name:<40} ERROR: {p.error}")
            else:
                lines.append(
                    f"{name:<40} {p.bleu.bleu:>8.4f} {p.rouge.f:>8.4f} {p.cer.cer:>8.4f}"
                )
        return "\n".join(lines)


def score_pair(extracted_text: str, truth_text: str) -> PairReport:
    cand_tokens = tokenize(extracted_text)
    ref_tokens = tokenize(truth_text)
    rep = PairReport("", "")
    rep.bleu = bleu(cand_tokens, ref_tokens)
    rep.rouge = rouge_l(cand_tokens, ref_tokens)
    rep.cer = cer(extracted_text, truth_text)
    return rep


def run_benchmark(
    pairs, truncate_chars: int = 50_000, strip_token: str = "<attachment>"
) -> BenchmarkReport:
    """Score (extracted, ground truth) file pairs, truncated for feasibility.

    Placeholder tokens are markup, not content, so they are stripped
    from the extracted side before scoring.  Per-pair failures are
    recorded in the report; the run never aborts.
    """
    report = BenchmarkReport()
    for extracted_path, truth_path in pairs:
        try:
            with open(extracted_path, encoding="utf-8", errors="replace") as f:
                cand = f.read()
            if strip_token:
                cand = cand.replace(strip_token, "")
                if not cand.strip():
                    cand = ""
            cand = cand[:truncate_chars]
            with open(truth_path, encoding="utf-8", errors="replace") as f:
                ref = f.read()[:truncate_chars]
            rep = score_pair(cand, ref)
            rep.extracted_path = str(extracted_path)
            rep.truth_path = str(truth_path)
        except OSError as e:
            rep = PairReport(str(extracted_path), str(truth_path), error=str(e))
        except EmptyReference as e:
            rep = PairReport(str(extracted_path), str(truth_path), error=str(e))
        report.pairs.append(rep)
    return report
