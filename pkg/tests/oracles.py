"""Independent reference implementations of the evaluation metrics, used as test oracles."""

import math
from fractions import Fraction

WORDS = list("abcdef")


def oracle_bleu(hyp, refs, n):
    """Sentence BLEU with smoothing 7, written out by hand from the definitions.

    Counting is brute force over positions, everything except the logarithms
    is exact rational arithmetic.
    """
    L = len(hyp)
    if L == 0:
        return 0.0

    def count(seq, gram):
        k = len(gram)
        return sum(1 for i in range(len(seq) - k + 1) if tuple(seq[i : i + k]) == gram)

    raw, totals = [], []
    for order in range(1, n + 2):
        grams = {tuple(hyp[i : i + order]) for i in range(L - order + 1)}
        m = sum(min(count(hyp, g), max(count(r, g) for r in refs)) for g in grams)
        raw.append(Fraction(m))
        totals.append(max(L - order + 1, 0))

    # method 4: the k-th zero count among orders that have n-grams
    m4 = list(raw[:n])
    k = 0
    for i in range(n):
        if m4[i] == 0 and totals[i] > 0 and L > 1:
            k += 1
            m4[i] = 1.0 / (2**k * 5 / math.log(L))
    # method 5: three-point average with m'_0 = m_1 + 1
    chain = [m4[0] + 1] + [None] * n
    nxt = m4[1:] + [raw[n]]
    for i in range(n):
        chain[i + 1] = (chain[i] + m4[i] + nxt[i]) / 3

    logs = []
    for i in range(n):
        if totals[i] == 0:
            continue
        p = min(float(chain[i + 1]) / totals[i], 1.0)
        if p == 0:
            return 0.0
        logs.append(math.log(p))
    diffs = sorted((abs(len(r) - L), len(r)) for r in refs)
    r = diffs[0][1]
    bp = 1.0 if L > r else math.exp(1 - r / L)
    return bp * math.exp(sum(logs) / len(logs))


def oracle_distinct(responses, n):
    grams = [tuple(r[i : i + n]) for r in responses for i in range(len(r) - n + 1)]
    return len(set(grams)) / len(grams) if grams else 0.0


def oracle_kappa(table):
    """Spreadsheet-style trace: every intermediate written out explicitly."""
    rows = [list(map(int, r)) for r in table]
    N, k = len(rows), len(rows[0])
    n = sum(rows[0])
    P = []
    for r in rows:
        agree = 0
        for c in r:
            agree += c * (c - 1)
        P.append(Fraction(agree, n * (n - 1)))
    P_bar = sum(P) / N
    p = [Fraction(sum(r[j] for r in rows), N * n) for j in range(k)]
    P_e = sum(x * x for x in p)
    return float((P_bar - P_e) / (1 - P_e))


def random_sentence(rng, lo=0, hi=10):
    return [WORDS[i] for i in rng.integers(0, len(WORDS), size=rng.integers(lo, hi + 1))]
