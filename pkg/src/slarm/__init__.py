"""Two-stage dialogue response generation: a direct reply plus a topic-guided supplementary sentence."""

from .config import RunConfig
from .corpus import DialoguePair, Vocabulary, build_vocabulary, load_corpus
from .estimator import SlarmResponder, TopicExtractor
from .evaluation import bleu_n, corpus_bleu, distinct_n, evaluate_run, fleiss_kappa
from .pipeline import SlarmSystem, Trainer, load_run, preprocess, respond, train
from .segmentation import make_cvae_input, segment_pair, segment_response
from .synth import make_synthetic_corpus
from .topic_graph import TopicGraph, build_graph, extract_topics, fit_tfidf, top_k_neighbors

__version__ = "0.1.0"

__all__ = [
    "DialoguePair",
    "RunConfig",
    "SlarmResponder",
    "SlarmSystem",
    "TopicExtractor",
    "TopicGraph",
    "Trainer",
    "Vocabulary",
    "bleu_n",
    "build_graph",
    "build_vocabulary",
    "corpus_bleu",
    "distinct_n",
    "evaluate_run",
    "extract_topics",
    "fit_tfidf",
    "fleiss_kappa",
    "load_corpus",
    "load_run",
    "make_cvae_input",
    "make_synthetic_corpus",
    "preprocess",
    "respond",
    "segment_pair",
    "segment_response",
    "top_k_neighbors",
    "train",
]
