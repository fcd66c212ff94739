"""BLEU with smoothing method 7, Distinct-n and Fleiss' kappa."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SMOOTHING_K = 5


class MetricInputError(ValueError):
    pass


def ngrams(tokens: Sequence[str], n: int) -> list[tuple]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def clipped_counts(hypothesis: Sequence[str], references: Sequence[Sequence[str]], n: int) -> tuple[int, int]:
    """``(matches, total)`` for order ``n``; each hypothesis n-gram count is clipped
    by its maximum count in any single reference."""
    hyp = Counter(ngrams(hypothesis, n))
    if not hyp:
        return 0, 0
    max_ref: Counter = Counter()
    for ref in references:
        for gram, c in Counter(ngrams(ref, n)).items():
            if c > max_ref[gram]:
                max_ref[gram] = c
    matches = sum(min(c, max_ref[gram]) for gram, c in hyp.items())
    return matches, sum(hyp.values())


def closest_ref_length(hyp_len: int, references: Sequence[Sequence[str]]) -> int:
    """Reference length nearest to ``hyp_len``; ties go to the shorter one."""
    return min((abs(len(r) - hyp_len), len(r)) for r in references)[1]


def brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len == 0:
        return 0.0
    if hyp_len > ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / hyp_len)


def smooth_counts(matches: Sequence[float], totals: Sequence[int], hyp_len: int, next_matches: float = 0.0) -> list[float]:
    """Smoothing method 7 on clipped match counts: method 4, then method 5.

    Method 4 replaces the k-th zero match count (k = 1, 2, ...) among orders
    that have n-grams by ``1 / (2**k * K / ln(hyp_len))`` with ``K = 5``; it is
    skipped for ``hyp_len <= 1`` where the logarithm vanishes.  Method 5 then
    averages each count with its smoothed predecessor (``m_1 + 1`` before the
    first order) and the next order's count; ``next_matches`` is the raw
    count one order beyond the last.
    """
    m = [float(x) for x in matches]
    k = 1
    for i, t in enumerate(totals):
        if m[i] == 0 and t > 0 and hyp_len > 1:
            m[i] = 1.0 / (2**k * SMOOTHING_K / math.log(hyp_len))
            k += 1
    lookahead = m[1:] + [float(next_matches)]
    prev = m[0] + 1.0
    out = []
    for i, m_i in enumerate(m):
        prev = (prev + m_i + lookahead[i]) / 3.0
        out.append(prev)
    return out


def _check(references, n):
    if not 1 <= n <= 4:
        raise MetricInputError(f"n must be in [1, 4], got {n}")
    if len(references) == 0:
        raise MetricInputError("at least one reference is required")


def bleu_n(hypothesis: Sequence[str], references: Sequence[Sequence[str]], n: int = 4) -> float:
    """Sentence BLEU over orders 1..n with uniform weights and smoothing method 7.

    An empty hypothesis scores 0.  Orders longer than the hypothesis have no
    n-grams and are left out of the geometric mean, so an exact match scores
    1 at every n.
    """
    return corpus_bleu([hypothesis], [references], n)


def corpus_bleu(
    hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[Sequence[str]]], n: int = 4
) -> float:
    """Corpus BLEU from summed clipped counts.

    Smoothing is applied to each sentence's counts (it depends on the
    sentence length), then the smoothed match counts, n-gram totals and
    lengths are summed over the corpus before precisions and the brevity
    penalty are taken.  A sentence contributes to order k only if it has
    k-grams.
    """
    if len(hypotheses) != len(references):
        raise MetricInputError(f"{len(hypotheses)} hypotheses but {len(references)} reference sets")
    if not 1 <= n <= 4:
        raise MetricInputError(f"n must be in [1, 4], got {n}")
    matched = np.zeros(n)
    totals = np.zeros(n, dtype=np.int64)
    hyp_len = ref_len = 0
    for hyp, refs in zip(hypotheses, references):
        refs = [list(r) for r in refs]
        _check(refs, n)
        hyp = list(hyp)
        counts = [clipped_counts(hyp, refs, k) for k in range(1, n + 2)]
        sent_totals = [t for _, t in counts[:n]]
        smoothed = smooth_counts([m for m, _ in counts[:n]], sent_totals, len(hyp), counts[n][0])
        for k in range(n):
            if sent_totals[k] > 0:
                matched[k] += smoothed[k]
                totals[k] += sent_totals[k]
        hyp_len += len(hyp)
        ref_len += closest_ref_length(len(hyp), refs)
    if hyp_len == 0:
        return 0.0
    logs = []
    for m, t in zip(matched, totals):
        if t == 0:
            continue
        p = min(float(m) / int(t), 1.0)
        if p <= 0.0:
            return 0.0
        logs.append(math.log(p))
    return brevity_penalty(hyp_len, ref_len) * math.exp(sum(logs) / len(logs))


def distinct_n(responses: Iterable[Sequence[str]], n: int) -> float:
    """Distinct n-grams over all responses divided by the total number of n-grams."""
    if n < 1:
        raise MetricInputError("n must be >= 1")
    seen = set()
    total = 0
    for r in responses:
        grams = ngrams(list(r), n)
        seen.update(grams)
        total += len(grams)
    return len(seen) / total if total else 0.0


@dataclass(frozen=True)
class RatingTable:
    """Items x categories matrix; entry (i, j) counts raters putting item i in category j."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise MetricInputError("rating table must be 2-D (items x categories)")
        if counts.size and (np.any(counts < 0) or np.any(counts != np.round(counts))):
            raise MetricInputError("rating counts must be non-negative integers")
        counts = counts.astype(np.int64)
        if counts.shape[0] < 2:
            raise MetricInputError("need at least 2 items")
        sums = counts.sum(axis=1)
        if np.any(sums != sums[0]):
            raise MetricInputError(f"every item needs the same number of raters; row sums are {sums.tolist()}")
        if sums[0] < 2:
            raise MetricInputError("need at least 2 raters per item")
        object.__setattr__(self, "counts", counts)

    @property
    def num_raters(self) -> int:
        return int(self.counts[0].sum())


def fleiss_kappa(table) -> float:
    """Fleiss' kappa; perfect agreement returns 1.0 even when chance agreement is also 1."""
    if not isinstance(table, RatingTable):
        table = RatingTable(np.asarray(table))
    c = table.counts.astype(np.float64)
    N = c.shape[0]
    n = table.num_raters
    P_i = (np.sum(c * c, axis=1) - n) / (n * (n - 1))
    P_bar = float(np.mean(P_i))
    p_j = c.sum(axis=0) / (N * n)
    P_e = float(np.sum(p_j * p_j))
    if P_e >= 1.0:
        return 1.0
    return (P_bar - P_e) / (1.0 - P_e)


@dataclass
class EvalReport:
    bleu: dict = field(default_factory=dict)
    distinct: dict = field(default_factory=dict)
    num_examples: int = 0

    def to_dict(self) -> dict:
        out = {f"bleu{n}": self.bleu[n] for n in sorted(self.bleu)}
        out.update({f"distinct{n}": self.distinct[n] for n in sorted(self.distinct)})
        out["num_examples"] = self.num_examples
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _read_lines(path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [line.split() for line in fh.read().splitlines()]


def evaluate(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]]) -> EvalReport:
    """Single-reference corpus evaluation."""
    if len(hypotheses) != len(references):
        raise MetricInputError(f"{len(hypotheses)} hypotheses but {len(references)} references")
    refs = [[r] for r in references]
    return EvalReport(
        bleu={n: corpus_bleu(hypotheses, refs, n) for n in range(1, 5)},
        distinct={n: distinct_n(hypotheses, n) for n in (1, 2)},
        num_examples=len(hypotheses),
    )


def evaluate_run(hyp_file, ref_file, out=None) -> EvalReport:
    """Score a hypotheses file against a line-aligned references file.

    With ``out`` the JSON report is also written to that path.
    """
    hyps, refs = _read_lines(hyp_file), _read_lines(ref_file)
    if len(hyps) != len(refs):
        raise MetricInputError(f"{hyp_file} has {len(hyps)} lines but {ref_file} has {len(refs)}")
    report = evaluate(hyps, refs)
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    return report
