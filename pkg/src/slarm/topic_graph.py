"""TF-IDF topic words and the post-to-response topic co-occurrence graph."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import SPECIAL_TOKENS

GRAPH_HEADER = "TOPICGRAPH v1"
TFIDF_HEADER = "TFIDF v1"

DEFAULT_STOP_WORDS = frozenset(
    """
    a about after all also am an and any are as at be because been before being but by
    can could did do does doing done for from get got had has have having he her here hers
    him his how i if in into is it its it's i'm i've just me more most my no nope not now of
    on once only or other our out over really she should so some such sure than that the
    their them then there these they this those to too very was we well were what when where
    which while who why will with would yeah yes yet you your yours
    . , ! ? ; : ' " - ( )
    """.split()
) | frozenset(SPECIAL_TOKENS)


class GraphFormatError(ValueError):
    pass


def load_stop_words(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


@dataclass
class TfIdfModel:
    document_frequency: dict[str, int]
    num_documents: int
    stop_words: frozenset[str] = frozenset()

    def idf(self, token: str) -> float:
        df = max(1, self.document_frequency.get(token, 1))
        return math.log(self.num_documents / df)

    def scores(self, utterance: Sequence[str]) -> dict[str, float]:
        tf = Counter(t for t in utterance if t not in self.stop_words)
        return {tok: n * self.idf(tok) for tok, n in tf.items()}

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{TFIDF_HEADER}\n{self.num_documents}\n")
            fh.write("\t".join(sorted(self.stop_words)) + "\n")
            for tok in sorted(self.document_frequency):
                fh.write(f"{tok}\t{self.document_frequency[tok]}\n")

    @classmethod
    def load(cls, path) -> "TfIdfModel":
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().split("\n")
        if len(lines) < 3 or lines[0] != TFIDF_HEADER:
            raise GraphFormatError(f"{path}: not a TF-IDF file")
        stop = frozenset(t for t in lines[2].split("\t") if t)
        df = {}
        for line in lines[3:]:
            if line:
                tok, _, count = line.rpartition("\t")
                df[tok] = int(count)
        return cls(df, int(lines[1]), stop)


def fit_tfidf(corpus: Iterable[Sequence[str]], stop_words: Iterable[str] = ()) -> TfIdfModel:
    """Document frequencies where each utterance is one document."""
    stop = frozenset(stop_words)
    df = Counter()
    n = 0
    for doc in corpus:
        n += 1
        df.update({t for t in doc if t not in stop})
    if n == 0:
        raise ValueError("cannot fit TF-IDF on an empty corpus")
    return TfIdfModel(dict(df), n, stop)


def extract_topics(model: TfIdfModel, utterance: Sequence[str], m: int = 3) -> list[str]:
    """Top-``m`` tokens by ``tf * ln(N / df)``; ties go to the lexicographically smaller token."""
    ranked = sorted(model.scores(utterance).items(), key=lambda kv: (-kv[1], kv[0]))
    return [tok for tok, _ in ranked[:m]]


@dataclass
class TopicGraph:
    """Directed co-occurrence counts from post topic words to response topic words."""

    counts: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def nodes(self) -> set[str]:
        out = set(self.counts)
        for targets in self.counts.values():
            out.update(targets)
        return out

    @property
    def num_edges(self) -> int:
        return sum(len(t) for t in self.counts.values())

    def add(self, source: str, target: str, count: int = 1) -> None:
        row = self.counts.setdefault(source, {})
        row[target] = row.get(target, 0) + count

    def probability(self, source: str, target: str) -> float:
        row = self.counts.get(source)
        if not row or target not in row:
            return 0.0
        return row[target] / sum(row.values())

    def edges(self, source: str) -> list[tuple[str, int, float]]:
        """``(target, count, probability)`` for every outgoing edge, sorted by target."""
        row = self.counts.get(source, {})
        total = sum(row.values())
        return [(t, row[t], row[t] / total) for t in sorted(row)]

    def __eq__(self, other):
        return isinstance(other, TopicGraph) and self.counts == other.counts


def build_graph(pairs, model: TfIdfModel, m: int = 3) -> TopicGraph:
    """Accumulate an edge from each post topic to each response topic over ``pairs``.

    ``pairs`` yields objects with ``post`` and ``response`` token sequences
    (``SegmentedPair`` rejoins direct and supplementary for this).
    """
    graph = TopicGraph()
    for pair in pairs:
        sources = extract_topics(model, pair.post, m)
        targets = extract_topics(model, pair.response, m)
        for s in sources:
            for t in targets:
                graph.add(s, t)
    return graph


def top_k_neighbors(graph: TopicGraph, topics: Sequence[str], k: int = 5) -> list[str]:
    """The ``k`` best distinct neighbours pooled over all query topics."""
    return [t for t, _ in scored_neighbors(graph, topics, k)]


def scored_neighbors(graph: TopicGraph, topics: Sequence[str], k: int = 5) -> list[tuple[str, float]]:
    best: dict[str, float] = defaultdict(float)
    for src in topics:
        for target, _, prob in graph.edges(src):
            if prob > best[target]:
                best[target] = prob
    ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def save_graph(graph: TopicGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(GRAPH_HEADER + "\n")
        for src in sorted(graph.counts):
            for tgt, count, _ in graph.edges(src):
                fh.write(f"{src}\t{tgt}\t{count}\n")


def load_graph(path) -> TopicGraph:
    graph = TopicGraph()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != GRAPH_HEADER:
            raise GraphFormatError(f"{path}: missing '{GRAPH_HEADER}' header")
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise GraphFormatError(f"{path}:{lineno}: expected source, target, count")
            try:
                count = int(cols[2])
            except ValueError as exc:
                raise GraphFormatError(f"{path}:{lineno}: bad count {cols[2]!r}") from exc
            if count < 1:
                raise GraphFormatError(f"{path}:{lineno}: count must be positive")
            graph.add(cols[0], cols[1], count)
    return graph
