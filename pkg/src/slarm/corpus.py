"""Tokenized dialogue pairs and the vocabulary that maps them to integer ids."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

PAD, UNK, BOS, EOS, SEP = "<PAD>", "<UNK>", "<BOS>", "<EOS>", "<SEP>"
SPECIAL_TOKENS = (PAD, UNK, BOS, EOS, SEP)
PAD_ID, UNK_ID, BOS_ID, EOS_ID, SEP_ID = range(5)


class ConfigurationError(ValueError):
    pass


class EmptyCorpusError(ValueError):
    pass


@dataclass(frozen=True)
class DialoguePair:
    post: tuple[str, ...]
    response: tuple[str, ...]

    def __post_init__(self):
        if not self.post or not self.response:
            raise ValueError("post and response must both be non-empty")


def parse_corpus_lines(lines: Iterable[str], max_len: int) -> tuple[list[DialoguePair], int]:
    """Parse ``post<TAB>response`` lines; returns the pairs and the number skipped."""
    if max_len < 1:
        raise ConfigurationError("max_len must be positive")
    pairs, skipped = [], 0
    for line in lines:
        line = line.rstrip("\r\n")
        post_text, sep, response_text = line.partition("\t")
        post, response = post_text.split(), response_text.split()
        if not sep or not post or not response:
            skipped += 1
            continue
        pairs.append(DialoguePair(tuple(post[:max_len]), tuple(response[:max_len])))
    return pairs, skipped


def load_corpus(path, max_len: int = 50) -> list[DialoguePair]:
    with open(path, encoding="utf-8") as fh:
        pairs, skipped = parse_corpus_lines(fh, max_len)
    if skipped:
        logger.warning("skipped %d line(s) with an empty side in %s", skipped, path)
    if not pairs:
        raise EmptyCorpusError(f"no valid dialogue pairs in {path}")
    return pairs


class Vocabulary:
    """Immutable token/id mapping; ids 0-4 are PAD, UNK, BOS, EOS, SEP."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[:5]) != SPECIAL_TOKENS:
            raise ValueError("vocabulary must start with the five special tokens")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens in vocabulary")
        self._id_to_token = tuple(tokens)
        self._token_to_id = {tok: i for i, tok in enumerate(tokens)}

    @property
    def id_to_token(self) -> tuple[str, ...]:
        return self._id_to_token

    @property
    def token_to_id(self) -> dict[str, int]:
        return dict(self._token_to_id)

    @property
    def size(self) -> int:
        return len(self._id_to_token)

    def __len__(self):
        return self.size

    def __contains__(self, token):
        return token in self._token_to_id

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self._id_to_token == other._id_to_token

    def __hash__(self):
        return hash(self._id_to_token)

    def id(self, token: str) -> int:
        return self._token_to_id.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self._id_to_token[idx]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self._token_to_id.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self._id_to_token[i] for i in ids]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self._id_to_token:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls([line.rstrip("\n") for line in fh if line.rstrip("\n")])


def build_vocabulary(corpus: Sequence[DialoguePair], max_size: int) -> Vocabulary:
    """Specials plus the ``max_size - 5`` most frequent tokens (ties: lexicographic)."""
    if max_size < 6:
        raise ConfigurationError(f"max vocabulary size must be at least 6, got {max_size}")
    if not corpus:
        raise EmptyCorpusError("cannot build a vocabulary from an empty corpus")
    counts = Counter()
    for pair in corpus:
        counts.update(pair.post)
        counts.update(pair.response)
    for tok in SPECIAL_TOKENS:
        counts.pop(tok, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(list(SPECIAL_TOKENS) + [tok for tok, _ in ranked[: max_size - 5]])


def encode(vocab: Vocabulary, tokens: Iterable[str]) -> list[int]:
    return vocab.encode(tokens)


def decode(vocab: Vocabulary, ids: Iterable[int]) -> list[str]:
    return vocab.decode(ids)
