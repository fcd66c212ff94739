"""Padding id sequences into the arrays the models consume."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import BOS_ID, EOS_ID, PAD_ID, SPECIAL_TOKENS


def pad(seqs: Sequence[Sequence[int]], value: int = PAD_ID, min_len: int = 1):
    """Right-pad to the batch maximum; returns ``(ids, mask)`` as ``(B, T)`` arrays."""
    width = max(min_len, max((len(s) for s in seqs), default=0))
    ids = np.full((len(seqs), width), value, dtype=np.int64)
    mask = np.zeros((len(seqs), width), dtype=np.float64)
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = s
        mask[i, : len(s)] = 1.0
    return ids, mask


@dataclass
class TeacherForcing:
    """Decoder inputs ``[BOS] + y`` and targets ``y + [EOS]`` with per-token loss weights.

    Weights make the batch loss the mean over examples of each example's
    mean token NLL; padded positions weigh zero.
    """

    inputs: np.ndarray
    targets: np.ndarray
    weights: np.ndarray

    @classmethod
    def build(cls, seqs: Sequence[Sequence[int]]) -> "TeacherForcing":
        inputs, _ = pad([[BOS_ID] + list(s) for s in seqs])
        targets, mask = pad([list(s) + [EOS_ID] for s in seqs])
        lengths = mask.sum(axis=1, keepdims=True)
        weights = mask / lengths / len(seqs)
        return cls(inputs, targets, weights)

    @property
    def steps(self) -> int:
        return self.inputs.shape[1]


@dataclass
class DrsgBatch:
    post_ids: np.ndarray
    post_mask: np.ndarray
    forcing: TeacherForcing

    @classmethod
    def build(cls, posts, directs) -> "DrsgBatch":
        if len(posts) != len(directs) or not posts:
            raise ValueError("need matching, non-empty posts and directs")
        if any(len(p) == 0 for p in posts):
            raise ValueError("empty post in batch")
        ids, mask = pad(posts)
        return cls(ids, mask, TeacherForcing.build(directs))

    @property
    def size(self) -> int:
        return self.post_ids.shape[0]


def bag_of_words(seq: Sequence[int]) -> list[int]:
    """Distinct non-special ids, sorted."""
    return sorted({i for i in seq if i >= len(SPECIAL_TOKENS)})


@dataclass
class CvaeBatch:
    """Everything one TGG-CVAE step needs for a batch.

    ``sup_content`` excludes the [EOS] placeholder; the posterior encoder
    still reads a one-token ``[EOS]`` sequence in that case.
    """

    xhat_ids: np.ndarray
    xhat_mask: np.ndarray
    sup_ids: np.ndarray
    sup_mask: np.ndarray
    forcing: TeacherForcing
    topic_ids: np.ndarray
    topic_mask: np.ndarray
    bags: list[list[int]]

    @classmethod
    def build(cls, xhats, sup_contents, topics, num_topics: int) -> "CvaeBatch":
        if not (len(xhats) == len(sup_contents) == len(topics)) or not xhats:
            raise ValueError("need matching, non-empty xhats, supplementaries and topics")
        if any(len(x) == 0 for x in xhats):
            raise ValueError("empty x-hat in batch")
        xhat_ids, xhat_mask = pad(xhats)
        sup_ids, sup_mask = pad([list(s) if s else [EOS_ID] for s in sup_contents])
        topic_ids = np.zeros((len(topics), num_topics), dtype=np.int64)
        topic_mask = np.zeros((len(topics), num_topics), dtype=np.float64)
        for i, tps in enumerate(topics):
            tps = list(tps)[:num_topics]
            topic_ids[i, : len(tps)] = tps
            topic_mask[i, : len(tps)] = 1.0
        return cls(
            xhat_ids,
            xhat_mask,
            sup_ids,
            sup_mask,
            TeacherForcing.build(sup_contents),
            topic_ids,
            topic_mask,
            [bag_of_words(s) for s in sup_contents],
        )

    @property
    def size(self) -> int:
        return self.xhat_ids.shape[0]
