"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

from typing import Sequence

from .corpus import DialoguePair


def as_tokens(item, name: str = "X") -> tuple[str, ...]:
    """Accept a whitespace-tokenized string or a sequence of string tokens."""
    if isinstance(item, str):
        return tuple(item.split())
    if isinstance(item, (list, tuple)):
        if not all(isinstance(tok, str) for tok in item):
            raise TypeError(f"{name} entries must be strings or sequences of strings")
        return tuple(item)
    raise TypeError(f"{name} entries must be strings or sequences of strings, got {type(item).__name__}")


def check_utterances(X, name: str = "X", allow_empty: bool = False) -> list[tuple[str, ...]]:
    """Validate a collection of utterances and return them as token tuples."""
    if isinstance(X, str):
        raise TypeError(f"{name} must be a collection of utterances, not a single string")
    try:
        items = list(X)
    except TypeError:
        raise TypeError(f"{name} must be iterable") from None
    if not items:
        raise ValueError(f"{name} is empty")
    out = [as_tokens(item, name) for item in items]
    if not allow_empty:
        empty = [i for i, toks in enumerate(out) if not toks]
        if empty:
            raise ValueError(f"{name} has empty utterance(s) at index {empty[:5]}")
    return out


def check_pairs(X, y) -> list[DialoguePair]:
    """Validate aligned posts and responses."""
    posts = check_utterances(X, "X")
    responses = check_utterances(y, "y")
    if len(posts) != len(responses):
        raise ValueError(f"X has {len(posts)} utterances but y has {len(responses)}")
    return [DialoguePair(p, r) for p, r in zip(posts, responses)]


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return value


def check_same_length(a: Sequence, b: Sequence, names=("a", "b")) -> None:
    if len(a) != len(b):
        raise ValueError(f"{names[0]} has length {len(a)} but {names[1]} has length {len(b)}")
