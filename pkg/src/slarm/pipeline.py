"""Preprocessing, joint training, checkpointed runs and sentence-level response generation."""

from __future__ import annotations

import csv
import logging
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .batching import CvaeBatch, DrsgBatch
from .config import RunConfig
from .corpus import SEP, SEP_ID, SPECIAL_TOKENS, UNK_ID, DialoguePair, Vocabulary, build_vocabulary
from .drsg import DrsgModel
from .nn import autograd as ag
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.layers import ParameterStore
from .nn.optim import Adam, TrainingError, clip_gradients
from .segmentation import SegmentedPair, load_segmented, make_cvae_input, save_segmented, segment_pair
from .tgg_cvae import AnnealSchedule, TggCvaeModel
from .topic_graph import (
    DEFAULT_STOP_WORDS,
    TfIdfModel,
    TopicGraph,
    build_graph,
    extract_topics,
    fit_tfidf,
    load_graph,
    load_stop_words,
    save_graph,
    top_k_neighbors,
)

logger = logging.getLogger(__name__)

HISTORY_FIELDS = ["epoch", "L_direct", "recon", "kl", "bow", "kl_weight", "lr", "total", "val_loss"]
_CKPT_RE = re.compile(r"epoch-(\d+)\.ckpt$")
_FROZEN = {"joint": (), "drsg": ("tgg_cvae.",), "cvae": ("drsg.",)}


class RunDirectoryError(FileNotFoundError):
    pass


@dataclass
class Preprocessed:
    pairs: list[SegmentedPair]
    vocab: Vocabulary
    tfidf: TfIdfModel
    graph: TopicGraph


def stop_words_for(config: RunConfig) -> frozenset[str]:
    base = load_stop_words(config.stop_words_path) if config.stop_words_path else DEFAULT_STOP_WORDS
    return base | frozenset(config.punctuation) | frozenset(SPECIAL_TOKENS)


def preprocess(corpus: Sequence[DialoguePair], config: RunConfig, run_dir=None) -> Preprocessed:
    """Segment every response, build vocabulary, TF-IDF statistics and the topic graph.

    With ``run_dir`` the artifacts are written there as config.json,
    vocab.txt, segmented.tsv, tfidf.txt and graph.txt.
    """
    pairs = [segment_pair(p, config.punctuation) for p in corpus]
    vocab = build_vocabulary(corpus, config.vocab_size)
    documents = [p.post for p in corpus] + [p.response for p in corpus]
    tfidf = fit_tfidf(documents, stop_words_for(config))
    graph = build_graph(pairs, tfidf, config.topics_per_utterance)
    data = Preprocessed(pairs, vocab, tfidf, graph)
    if run_dir is not None:
        write_artifacts(data, config, run_dir)
    return data


def write_artifacts(data: Preprocessed, config: RunConfig, run_dir) -> None:
    run = Path(run_dir)
    run.mkdir(parents=True, exist_ok=True)
    config.save(run / "config.json")
    data.vocab.save(run / "vocab.txt")
    save_segmented(data.pairs, run / "segmented.tsv")
    data.tfidf.save(run / "tfidf.txt")
    save_graph(data.graph, run / "graph.txt")


def load_artifacts(run_dir) -> tuple[RunConfig, Preprocessed]:
    run = Path(run_dir)
    required = ["config.json", "vocab.txt", "segmented.tsv", "tfidf.txt", "graph.txt"]
    missing = [name for name in required if not (run / name).exists()]
    if missing:
        raise RunDirectoryError(f"run directory {run} is missing {', '.join(missing)}; run preprocess first")
    config = RunConfig.load(run / "config.json")
    data = Preprocessed(
        load_segmented(run / "segmented.tsv"),
        Vocabulary.load(run / "vocab.txt"),
        TfIdfModel.load(run / "tfidf.txt"),
        load_graph(run / "graph.txt"),
    )
    return config, data


@dataclass
class GenerationResult:
    direct: list[int]
    supplementary: list[int]
    direct_tokens: list[str] = field(default_factory=list)
    supplementary_tokens: list[str] = field(default_factory=list)

    @property
    def full(self) -> list[int]:
        return self.direct + self.supplementary

    @property
    def full_tokens(self) -> list[str]:
        return self.direct_tokens + self.supplementary_tokens

    @property
    def text(self) -> str:
        return " ".join(self.full_tokens)


class SlarmSystem:
    """Both generators plus the vocabulary, TF-IDF model and topic graph they rely on."""

    def __init__(self, config: RunConfig, vocab: Vocabulary, tfidf: TfIdfModel, graph: TopicGraph):
        self.config = config
        self.vocab = vocab
        self.tfidf = tfidf
        self.graph = graph
        self.store = ParameterStore(seed=config.seed)
        V = vocab.size
        self.drsg = DrsgModel(
            self.store, V, config.embed_size, config.hidden_size, config.num_layers
        )
        self.cvae = TggCvaeModel(
            self.store,
            V,
            config.embed_size,
            config.hidden_size,
            config.latent_size,
            config.num_topics,
            config.num_layers,
            use_topics=config.use_topics,
            use_latent=config.use_latent,
        )

    def topic_ids(self, xhat_tokens: Sequence[str]) -> list[int]:
        """Graph neighbours of the TF-IDF topics of ``x-hat``, as in-vocabulary ids."""
        topics = extract_topics(self.tfidf, xhat_tokens, self.config.topics_per_utterance)
        neighbours = top_k_neighbors(self.graph, topics, self.config.num_topics)
        ids = [self.vocab.id(w) for w in neighbours]
        return [i for i in ids if i != UNK_ID]

    def respond(self, post: Sequence[str], rng=None, eps=None, eps_zero: bool = False) -> GenerationResult:
        """Generate the direct part, then the supplementary part conditioned on it."""
        post = list(post)[: self.config.max_len]
        if not post:
            raise ValueError("cannot respond to an empty post")
        cfg = self.config
        post_ids = self.vocab.encode(post)
        direct = self.drsg.generate(post_ids, cfg.max_decode_len)
        direct_tokens = self.vocab.decode(direct)
        xhat = make_cvae_input(post_ids, direct) if direct else post_ids + [SEP_ID]
        topics = self.topic_ids(post + [SEP] + direct_tokens)
        if eps is None:
            if eps_zero:
                eps = np.zeros(cfg.latent_size)
            else:
                rng = rng if rng is not None else np.random.default_rng()
                eps = rng.standard_normal(cfg.latent_size)
        sup = self.cvae.generate(xhat, topics, eps, cfg.max_decode_len)
        return GenerationResult(direct, sup, direct_tokens, self.vocab.decode(sup))

    def save(self, path, optimizer: Adam | None = None) -> None:
        save_checkpoint(path, self.store, optimizer)

    def load_weights(self, path, optimizer: Adam | None = None) -> int:
        return load_checkpoint(path, self.store, optimizer)


def latest_checkpoint(run_dir) -> Path | None:
    ckpt_dir = Path(run_dir) / "checkpoints"
    if not ckpt_dir.is_dir():
        return None
    found = []
    for p in ckpt_dir.iterdir():
        m = _CKPT_RE.match(p.name)
        if m:
            found.append((int(m.group(1)), p))
    return max(found)[1] if found else None


def load_run(run_dir, checkpoint=None) -> SlarmSystem:
    config, data = load_artifacts(run_dir)
    system = SlarmSystem(config, data.vocab, data.tfidf, data.graph)
    ckpt = Path(checkpoint) if checkpoint else latest_checkpoint(run_dir)
    if ckpt is None:
        raise RunDirectoryError(f"no checkpoint found in {run_dir}; run train first")
    system.load_weights(ckpt)
    return system


@dataclass
class EncodedPair:
    post: list[int]
    direct: list[int]
    sup_content: list[int]
    xhat: list[int]
    topics: list[int]


class Trainer:
    """Owns the system, the optimizer and all random streams for one training run."""

    def __init__(self, config: RunConfig, data: Preprocessed, run_dir=None):
        self.config = config
        self.data = data
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.system = SlarmSystem(config, data.vocab, data.tfidf, data.graph)
        self.optimizer = Adam(
            self.system.store, config.learning_rate, config.beta1, config.beta2, config.adam_eps
        )
        self.schedule = AnnealSchedule(config.warmup_steps, config.kl_floor)
        self.shuffle_rng = np.random.default_rng([config.seed, 1])
        self.eps_rng = np.random.default_rng([config.seed, 2])
        encoded = [self.encode(p) for p in data.pairs]
        self.train_pairs, self.val_pairs = self._split(encoded)
        self.history: list[dict] = []
        self.best_val = math.inf
        self.bad_epochs = 0

    def encode(self, pair: SegmentedPair) -> EncodedPair:
        vocab = self.system.vocab
        post = vocab.encode(pair.post)
        direct = vocab.encode(pair.direct)
        sup = vocab.encode(pair.supplementary_content)
        topics = self.system.topic_ids(list(pair.post) + [SEP] + list(pair.direct))
        return EncodedPair(post, direct, sup, make_cvae_input(post, direct), topics)

    def _split(self, encoded):
        n_val = int(len(encoded) * self.config.val_fraction)
        if len(encoded) < self.config.min_val_pairs or n_val == 0:
            return encoded, []
        order = np.random.default_rng([self.config.seed, 3]).permutation(len(encoded))
        val_idx = set(order[:n_val].tolist())
        train = [e for i, e in enumerate(encoded) if i not in val_idx]
        val = [e for i, e in enumerate(encoded) if i in val_idx]
        return train, val

    def _batches(self, pairs, shuffle: bool):
        idx = self.shuffle_rng.permutation(len(pairs)) if shuffle else np.arange(len(pairs))
        bs = self.config.batch_size
        for lo in range(0, len(pairs), bs):
            yield [pairs[i] for i in idx[lo : lo + bs]]

    def _losses(self, batch, kl_weight, eps, phase="joint"):
        cfg = self.config
        sys = self.system
        direct = sys.drsg.batch_loss(DrsgBatch.build([e.post for e in batch], [e.direct for e in batch]))
        cbatch = CvaeBatch.build(
            [e.xhat for e in batch], [e.sup_content for e in batch], [e.topics for e in batch], cfg.num_topics
        )
        recon, kl, bow = sys.cvae.elbo_terms(cbatch, eps)
        cvae_total = (recon + kl * kl_weight) * cfg.elbo_weight + bow * cfg.bow_weight
        if phase == "drsg":
            total = direct * cfg.direct_weight
        elif phase == "cvae":
            total = cvae_total
        else:
            total = direct * cfg.direct_weight + cvae_total
        parts = {
            "L_direct": float(direct.data),
            "recon": float(recon.data),
            "kl": float(kl.data),
            "bow": float(bow.data),
            "kl_weight": float(kl_weight),
        }
        parts["total"] = parts["L_direct"] + parts["recon"] + parts["kl_weight"] * parts["kl"] + parts["bow"]
        return total, parts

    def _phase(self, epoch: int) -> str:
        if self.config.schedule == "joint":
            return "joint"
        return "drsg" if epoch < self.config.epochs // 2 else "cvae"

    def train_epoch(self, epoch: int) -> dict:
        cfg = self.config
        store = self.system.store
        sums = dict.fromkeys(["L_direct", "recon", "kl", "bow", "kl_weight", "total"], 0.0)
        seen = 0
        phase = self._phase(epoch)
        for batch in self._batches(self.train_pairs, shuffle=True):
            kl_weight = self.schedule.weight(self.optimizer.t)
            eps = self.eps_rng.standard_normal((len(batch), cfg.latent_size))
            total, parts = self._losses(batch, kl_weight, eps, phase)
            if not math.isfinite(float(total.data)):
                raise TrainingError(f"non-finite loss at epoch {epoch}: {parts}")
            store.zero_grad()
            total.backward()
            clip_gradients(store, cfg.max_grad_norm)
            self.optimizer.step(skip=_FROZEN[phase])
            for key in sums:
                sums[key] += parts[key] * len(batch)
            seen += len(batch)
        record = {"epoch": epoch, **{k: v / max(seen, 1) for k, v in sums.items()}}
        record["lr"] = self.optimizer.lr
        record["val_loss"] = self.validation_loss()
        self._maybe_decay(record["val_loss"])
        return record

    def validation_loss(self) -> float:
        """Joint loss on the held-out pairs (the training pairs when nothing is held out), eps = 0."""
        pairs = self.val_pairs or self.train_pairs
        kl_weight = self.schedule.weight(self.optimizer.t)
        self.system.drsg.eval()
        self.system.cvae.eval()
        try:
            total, seen = 0.0, 0
            for batch in self._batches(pairs, shuffle=False):
                eps = np.zeros((len(batch), self.config.latent_size))
                _, parts = self._losses(batch, kl_weight, eps)
                total += parts["total"] * len(batch)
                seen += len(batch)
        finally:
            self.system.drsg.train()
            self.system.cvae.train()
        return total / max(seen, 1)

    def _maybe_decay(self, val_loss: float) -> None:
        if val_loss < self.best_val:
            self.best_val = val_loss
            self.bad_epochs = 0
            return
        self.bad_epochs += 1
        if self.bad_epochs >= self.config.lr_patience:
            self.optimizer.lr *= self.config.lr_decay
            self.bad_epochs = 0

    def fit(self, epochs: int | None = None) -> list[dict]:
        epochs = self.config.epochs if epochs is None else epochs
        start = len(self.history)
        for epoch in range(start, start + epochs):
            record = self.train_epoch(epoch)
            self.history.append(record)
            logger.info(
                "epoch %d total=%.4f direct=%.4f recon=%.4f kl=%.4f bow=%.4f",
                epoch, record["total"], record["L_direct"], record["recon"], record["kl"], record["bow"],
            )
            if self.run_dir is not None:
                self._write_epoch(record)
        return self.history

    def _write_epoch(self, record: dict) -> None:
        ckpt_dir = self.run_dir / "checkpoints"
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        self.system.save(ckpt_dir / f"epoch-{record['epoch']}.ckpt", self.optimizer)
        keep = self.config.keep_checkpoints
        if keep > 0:
            stale = sorted(
                (int(m.group(1)), p) for p in ckpt_dir.iterdir() if (m := _CKPT_RE.match(p.name))
            )[:-keep]
            for _, p in stale:
                p.unlink()
        write_history(self.history, self.run_dir / "history.csv")


def write_history(history: list[dict], path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_FIELDS)
        for rec in history:
            writer.writerow([rec["epoch"]] + [repr(float(rec[k])) for k in HISTORY_FIELDS[1:]])
    os.replace(tmp, path)


def train(config: RunConfig | None, run_dir) -> dict:
    """Train on the preprocessed artifacts in ``run_dir``; returns the final epoch record.

    ``config`` overrides the stored config.json when given (and is written back).
    """
    stored, data = load_artifacts(run_dir)
    config = config or stored
    config.save(Path(run_dir) / "config.json")
    trainer = Trainer(config, data, run_dir)
    history = trainer.fit()
    final = dict(history[-1]) if history else {}
    final["num_train_pairs"] = len(trainer.train_pairs)
    final["num_val_pairs"] = len(trainer.val_pairs)
    return final


def respond(system: SlarmSystem, post: Sequence[str], rng=None, eps_zero: bool = False) -> GenerationResult:
    return system.respond(post, rng=rng, eps_zero=eps_zero)
