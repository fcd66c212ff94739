"""Cutting responses into a direct answer and a supplementary continuation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import EOS, SEP_ID, DialoguePair

DEFAULT_PUNCTUATION = frozenset({".", ",", "!", "?", ";", ":"})


@dataclass(frozen=True)
class SegmentedPair:
    """A post with its response split in two.

    ``supplementary`` is ``("<EOS>",)`` when the response had nothing to cut
    off; :attr:`supplementary_content` hides that placeholder.
    """

    post: tuple[str, ...]
    direct: tuple[str, ...]
    supplementary: tuple[str, ...]

    def __post_init__(self):
        if not self.post or not self.direct or not self.supplementary:
            raise ValueError("post, direct and supplementary must be non-empty")

    @property
    def has_supplementary(self) -> bool:
        return self.supplementary != (EOS,)

    @property
    def supplementary_content(self) -> tuple[str, ...]:
        return self.supplementary if self.has_supplementary else ()

    @property
    def response(self) -> tuple[str, ...]:
        return self.direct + self.supplementary_content


def cut_point(response: Sequence[str], punct: Iterable[str] = DEFAULT_PUNCTUATION) -> int | None:
    """Index of the punctuation token the response is cut after, or None.

    A sentence-final mark is never a candidate.  With an even number of
    candidates the later of the two middle ones is taken.
    """
    punct = frozenset(punct)
    candidates = [i for i, tok in enumerate(response[:-1]) if tok in punct]
    if not candidates:
        return None
    return candidates[len(candidates) // 2]


def segment_response(response: Sequence[str], punct: Iterable[str] = DEFAULT_PUNCTUATION):
    """Split ``response`` into ``(direct, supplementary)`` token tuples."""
    response = tuple(response)
    if not response:
        raise ValueError("cannot segment an empty response")
    cut = cut_point(response, punct)
    if cut is None:
        return response, (EOS,)
    return response[: cut + 1], response[cut + 1 :]


def segment_pair(pair: DialoguePair, punct: Iterable[str] = DEFAULT_PUNCTUATION) -> SegmentedPair:
    direct, sup = segment_response(pair.response, punct)
    return SegmentedPair(tuple(pair.post), direct, sup)


def make_cvae_input(post: Sequence[int], direct: Sequence[int], sep_id: int = SEP_ID) -> list[int]:
    """``post ++ [SEP] ++ direct``."""
    if not post or not direct:
        raise ValueError("post and direct must both be non-empty")
    return list(post) + [sep_id] + list(direct)


def save_segmented(pairs: Iterable[SegmentedPair], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write("\t".join((" ".join(p.post), " ".join(p.direct), " ".join(p.supplementary))) + "\n")


def load_segmented(path) -> list[SegmentedPair]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(cols)}")
            out.append(SegmentedPair(*(tuple(c.split()) for c in cols)))
    return out
