"""scikit-learn style wrappers around the training pipeline and topic extraction."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import _validation as val
from .config import RunConfig
from .evaluation import corpus_bleu
from .pipeline import SlarmSystem, Trainer, preprocess, stop_words_for
from .topic_graph import extract_topics, fit_tfidf


class SlarmResponder(BaseEstimator):
    """Two-stage responder: fit on (post, response) pairs, predict responses for posts.

    ``None`` for a size parameter means "use the profile's value".
    ``predict`` is deterministic (latent noise fixed at zero); ``sample``
    draws the latent noise from ``random_state``.

    Examples
    --------
    >>> model = SlarmResponder(epochs=2).fit(["how are you ?"], ["fine , thanks a lot ."])
    >>> len(model.predict(["how are you ?"]))
    1
    """

    def __init__(
        self,
        profile="desk",
        vocab_size=None,
        embed_size=None,
        hidden_size=None,
        latent_size=None,
        batch_size=None,
        num_layers=2,
        num_topics=5,
        topics_per_utterance=3,
        learning_rate=1e-3,
        epochs=20,
        warmup_steps=2000,
        max_decode_len=30,
        val_fraction=0.1,
        use_topics=True,
        use_latent=True,
        seed=0,
    ):
        self.profile = profile
        self.vocab_size = vocab_size
        self.embed_size = embed_size
        self.hidden_size = hidden_size
        self.latent_size = latent_size
        self.batch_size = batch_size
        self.num_layers = num_layers
        self.num_topics = num_topics
        self.topics_per_utterance = topics_per_utterance
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.warmup_steps = warmup_steps
        self.max_decode_len = max_decode_len
        self.val_fraction = val_fraction
        self.use_topics = use_topics
        self.use_latent = use_latent
        self.seed = seed

    def _config(self) -> RunConfig:
        params = self.get_params()
        profile = params.pop("profile")
        overrides = {k: v for k, v in params.items() if v is not None}
        return RunConfig.for_profile(profile, **overrides)

    def fit(self, X, y):
        """Preprocess the pairs and train both generators jointly."""
        corpus = val.check_pairs(X, y)
        config = self._config()
        data = preprocess(corpus, config)
        trainer = Trainer(config, data)
        trainer.fit()
        self.config_ = config
        self.system_: SlarmSystem = trainer.system
        self.history_ = list(trainer.history)
        self.vocabulary_ = data.vocab
        self.graph_ = data.graph
        self.n_pairs_ = len(corpus)
        return self

    def respond(self, X, random_state=None, eps_zero=True):
        """Full :class:`GenerationResult` objects, one per post."""
        check_is_fitted(self, "system_")
        posts = val.check_utterances(X)
        rng = np.random.default_rng(random_state)
        return [self.system_.respond(list(p), rng=rng, eps_zero=eps_zero) for p in posts]

    def predict(self, X):
        """Deterministic responses as space-joined strings."""
        return [r.text for r in self.respond(X, eps_zero=True)]

    def sample(self, X, random_state=None):
        """Responses with the latent noise drawn from ``random_state``."""
        return [r.text for r in self.respond(X, random_state=random_state, eps_zero=False)]

    def score(self, X, y):
        """Corpus BLEU-4 of the deterministic predictions against ``y``."""
        refs = val.check_utterances(y, "y")
        hyps = [r.full_tokens for r in self.respond(X, eps_zero=True)]
        val.check_same_length(hyps, refs, ("X", "y"))
        return corpus_bleu(hyps, [[r] for r in refs], 4)


class TopicExtractor(BaseEstimator, TransformerMixin):
    """Top-``m`` TF-IDF topic words per utterance.

    ``stop_words=None`` uses the built-in English list plus punctuation.
    """

    def __init__(self, m=3, stop_words=None):
        self.m = m
        self.stop_words = stop_words

    def fit(self, X, y=None):
        val.check_positive_int(self.m, "m")
        docs = val.check_utterances(X, allow_empty=True)
        if self.stop_words is None:
            stops = stop_words_for(RunConfig())
        else:
            stops = frozenset(self.stop_words)
        self.tfidf_ = fit_tfidf(docs, stops)
        self.n_documents_ = len(docs)
        return self

    def transform(self, X):
        check_is_fitted(self, "tfidf_")
        docs = val.check_utterances(X, allow_empty=True)
        return [extract_topics(self.tfidf_, d, self.m) for d in docs]


__all__ = ["SlarmResponder", "TopicExtractor"]
