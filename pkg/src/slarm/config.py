"""Run configuration and the two hyperparameter profiles."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields

from .corpus import ConfigurationError
from .segmentation import DEFAULT_PUNCTUATION

PROFILES = {
    # test-scale: small enough that a toy corpus trains in minutes on one core
    "desk": dict(vocab_size=2000, embed_size=32, hidden_size=64, latent_size=32, batch_size=2, num_topics=5),
    "paper": dict(vocab_size=40000, embed_size=200, hidden_size=256, latent_size=32, batch_size=128, num_topics=5),
}
PAPER_PINNED = ("vocab_size", "embed_size", "hidden_size", "batch_size", "num_topics")


@dataclass
class RunConfig:
    profile: str = "desk"
    vocab_size: int = 2000
    embed_size: int = 32
    hidden_size: int = 64
    latent_size: int = 32
    num_layers: int = 2
    num_topics: int = 5
    topics_per_utterance: int = 3
    max_len: int = 50
    max_decode_len: int = 30
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    lr_decay: float = 0.99
    lr_patience: int = 3
    max_grad_norm: float = 5.0
    batch_size: int = 2
    epochs: int = 20
    warmup_steps: int = 2000
    kl_floor: float = 0.0
    seed: int = 0
    val_fraction: float = 0.1
    min_val_pairs: int = 20
    punctuation: list = field(default_factory=lambda: sorted(DEFAULT_PUNCTUATION))
    stop_words_path: str = ""
    use_topics: bool = True
    use_latent: bool = True
    direct_weight: float = 1.0
    elbo_weight: float = 1.0
    bow_weight: float = 1.0
    schedule: str = "joint"
    keep_checkpoints: int = 3

    def __post_init__(self):
        self.validate()

    @classmethod
    def for_profile(cls, profile: str = "desk", **overrides) -> "RunConfig":
        if profile not in PROFILES:
            raise ConfigurationError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
        values = {**PROFILES[profile], **overrides, "profile": profile}
        return cls(**values)

    def validate(self) -> None:
        if self.profile not in PROFILES:
            raise ConfigurationError(f"unknown profile {self.profile!r}")
        positive = [
            "vocab_size", "embed_size", "hidden_size", "latent_size", "num_layers", "num_topics",
            "topics_per_utterance", "max_len", "batch_size", "lr_patience",
        ]
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.vocab_size < 6:
            raise ConfigurationError("vocab_size must be at least 6")
        for name in ("learning_rate", "max_grad_norm", "adam_eps"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.epochs < 0 or self.warmup_steps < 0 or self.max_decode_len < 0:
            raise ConfigurationError("epochs, warmup_steps and max_decode_len must be >= 0")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigurationError("val_fraction must be in [0, 1)")
        if not 0.0 <= self.kl_floor <= 1.0:
            raise ConfigurationError("kl_floor must be in [0, 1]")
        if self.schedule not in ("joint", "two_phase"):
            raise ConfigurationError("schedule must be 'joint' or 'two_phase'")
        if self.profile == "paper":
            for name in PAPER_PINNED:
                if getattr(self, name) != PROFILES["paper"][name]:
                    raise ConfigurationError(f"profile 'paper' pins {name}={PROFILES['paper'][name]}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown config field(s): {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)
