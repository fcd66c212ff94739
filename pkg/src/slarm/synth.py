"""Templated toy dialogue corpus with controlled topic co-occurrence."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOPICS = {
    "pizza": ("cheese", "crust", "oven"),
    "sushi": ("rice", "salmon", "wasabi"),
    "movie": ("actor", "popcorn", "cinema"),
    "football": ("goal", "stadium", "coach"),
    "guitar": ("chords", "strings", "band"),
    "beach": ("sand", "waves", "sunscreen"),
    "coffee": ("espresso", "beans", "mug"),
    "novel": ("chapter", "author", "plot"),
    "garden": ("roses", "soil", "tomatoes"),
    "hiking": ("trail", "boots", "summit"),
    "rain": ("umbrella", "puddles", "thunder"),
    "concert": ("singer", "tickets", "crowd"),
}


@dataclass(frozen=True)
class TemplateBank:
    """Building blocks for responses of the form ``direct , supplementary .``.

    Direct phrases end in a comma and supplementary templates contain no
    punctuation except the final full stop, so every response has exactly
    one cut candidate.
    """

    topics: dict = field(default_factory=lambda: dict(DEFAULT_TOPICS))
    post_templates: tuple = (
        "do you like {t} ?",
        "have you tried the {t} lately ?",
        "what about {t} tonight ?",
        "any thoughts on {t} ?",
        "how was the {t} ?",
    )
    direct_phrases: tuple = (
        "yes i do ,",
        "not really ,",
        "of course ,",
        "it was fine ,",
        "i guess so ,",
    )
    sup_templates: tuple = (
        "the {r} was amazing .",
        "i really miss the {r} .",
        "my friend loves the {r} .",
        "we talked about the {r} .",
    )


def make_synthetic_corpus(
    seed: int, n_pairs: int, bank: TemplateBank | None = None, responses_per_post: int = 1, out=None
) -> list[tuple[str, str]]:
    """Generate ``n_pairs`` (post, response) strings; optionally write them as TSV to ``out``.

    Posts are distinct topic/template combinations drawn without
    replacement (cycling once exhausted).  Each post keeps one direct phrase;
    with ``responses_per_post > 1`` it gets that many different
    supplementary phrases, which makes the supplementary mapping one-to-many.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    if responses_per_post < 1:
        raise ValueError("responses_per_post must be at least 1")
    bank = bank or TemplateBank()
    rng = np.random.default_rng(seed)
    topic_names = sorted(bank.topics)
    combos = [(t, p) for t in topic_names for p in bank.post_templates]
    order = rng.permutation(len(combos))

    pairs = []
    post_index = 0
    while len(pairs) < n_pairs:
        topic, template = combos[order[post_index % len(combos)]]
        post_index += 1
        post = template.format(t=topic)
        direct = bank.direct_phrases[rng.integers(len(bank.direct_phrases))]
        sup_choices = [(s, r) for s in bank.sup_templates for r in bank.topics[topic]]
        picks = rng.choice(len(sup_choices), size=min(responses_per_post, len(sup_choices)), replace=False)
        for k in picks:
            if len(pairs) == n_pairs:
                break
            sup_template, related = sup_choices[k]
            pairs.append((post, f"{direct} {sup_template.format(r=related)}"))
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            for post, response in pairs:
                fh.write(f"{post}\t{response}\n")
    return pairs
