"""Topic-graph-guided conditional VAE for the supplementary part of a response."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .batching import CvaeBatch
from .corpus import BOS_ID, EOS_ID, PAD_ID, SEP_ID
from .nn import autograd as ag
from .nn.autograd import Tensor
from .nn.layers import Linear, Module, ParameterStore, StackedGru

BANNED_IDS = (PAD_ID, BOS_ID, SEP_ID)


def _wrap(*xs):
    plain = not any(isinstance(x, Tensor) for x in xs)
    return plain, [ag.lift(x) for x in xs]


def reparameterize(mu, log_var, eps):
    """``mu + exp(0.5 * log_var) * eps``; plain arrays in give a plain array out."""
    plain, (mu, log_var, eps) = _wrap(mu, log_var, eps)
    if mu.shape != log_var.shape or mu.shape != eps.shape:
        raise ValueError("mu, log_var and eps must share a shape")
    z = mu + ag.exp(log_var * 0.5) * eps
    return z.data if plain else z


def kl_divergence(mu, log_var, mu_post, log_var_post):
    """KL(posterior || prior) for diagonal Gaussians, summed over the last axis.

    Per dimension: ``log(s/s') + (s'^2 + (m - m')^2) / (2 s^2) - 1/2`` with
    ``(m, s)`` the prior and ``(m', s')`` the posterior.
    """
    plain, (mu, log_var, mu_post, log_var_post) = _wrap(mu, log_var, mu_post, log_var_post)
    diff = mu - mu_post
    per_dim = (
        (log_var - log_var_post) * 0.5
        + (ag.exp(log_var_post) + diff * diff) * 0.5 * ag.exp(-log_var)
        - 0.5
    )
    out = ag.tsum(per_dim, axis=-1)
    return out.data if plain else out


@dataclass
class LatentState:
    mu: np.ndarray
    log_var: np.ndarray
    eps: np.ndarray
    z: np.ndarray

    @classmethod
    def draw(cls, mu, log_var, eps) -> "LatentState":
        mu, log_var, eps = (np.asarray(a, dtype=np.float64) for a in (mu, log_var, eps))
        return cls(mu, log_var, eps, reparameterize(mu, log_var, eps))


@dataclass(frozen=True)
class AnnealSchedule:
    """Linear KL weight ramp from ``floor`` to 1 over ``warmup_steps`` optimizer steps."""

    warmup_steps: int = 2000
    floor: float = 0.0

    def __post_init__(self):
        if self.warmup_steps < 0 or not 0.0 <= self.floor <= 1.0:
            raise ValueError("warmup_steps must be >= 0 and floor within [0, 1]")

    def weight(self, step: int) -> float:
        if self.warmup_steps == 0 or step >= self.warmup_steps:
            return 1.0
        return self.floor + (1.0 - self.floor) * max(step, 0) / self.warmup_steps


class TggCvaeModel(Module):
    """Prior/posterior GRU encoders, Gaussian latent, topic mixture and a GRU decoder.

    ``use_topics=False`` zeroes the topic vector; ``use_latent=False`` replaces
    the sampled latent by the prior mean (a deterministic function of the
    context encoding) and drops the KL term.
    """

    def __init__(
        self,
        store: ParameterStore,
        vocab_size: int,
        embed_size: int = 32,
        hidden_size: int = 64,
        latent_size: int = 32,
        num_topics: int = 5,
        num_layers: int = 2,
        use_topics: bool = True,
        use_latent: bool = True,
        name: str = "tgg_cvae",
    ):
        super().__init__(store, name)
        self.vocab_size = vocab_size
        self.embed_size = embed_size
        self.hidden_size = hidden_size
        self.latent_size = latent_size
        self.num_topics = num_topics
        self.num_layers = num_layers
        self.use_topics = use_topics
        self.use_latent = use_latent
        E, H, Z = embed_size, hidden_size, latent_size
        store.add(f"{name}.embedding", (vocab_size, E))
        self.prior_encoder = StackedGru(store, f"{name}.prior_encoder", E, H, num_layers)
        self.prior_proj = Linear(store, f"{name}.prior_proj", H, 2 * Z)
        if use_latent:
            self.posterior_encoder = StackedGru(store, f"{name}.posterior_encoder", E, H, num_layers)
            self.posterior_proj = Linear(store, f"{name}.posterior_proj", 2 * H, 2 * Z)
        if use_topics:
            self.topic_proj = Linear(store, f"{name}.topic_proj", Z, num_topics)
        self.bridge = [Linear(store, f"{name}.bridge{i}", H, H) for i in range(num_layers)]
        self.decoder = StackedGru(store, f"{name}.decoder", 2 * E + Z, H, num_layers)
        self.output = Linear(store, f"{name}.output", H, vocab_size)
        self.bow = Linear(store, f"{name}.bow", Z + H, vocab_size)

    def embed(self, ids):
        return ag.embedding(self.p("embedding"), ids)

    def _split(self, stats):
        Z = self.latent_size
        return stats[:, :Z], stats[:, Z:]

    def encode_context(self, xhat_ids, xhat_mask):
        _, finals = self.prior_encoder.encode(self.embed(xhat_ids), xhat_mask)
        return finals[-1]

    def prior(self, h_x):
        """``(mu, log_var)`` from the affine map of the context encoding."""
        return self._split(self.prior_proj(h_x))

    def posterior(self, h_x, sup_ids, sup_mask):
        _, finals = self.posterior_encoder.encode(self.embed(sup_ids), sup_mask)
        return self._split(self.posterior_proj(ag.concat([h_x, finals[-1]])))

    def prior_params(self, xhat: Sequence[int]):
        """Unbatched convenience: prior mean and log-variance for one x-hat."""
        if len(xhat) == 0:
            raise ValueError("x-hat must be non-empty")
        ids = np.asarray([xhat], dtype=np.int64)
        mu, log_var = self.prior(self.encode_context(ids, np.ones(ids.shape)))
        return mu.data[0], log_var.data[0]

    def posterior_params(self, xhat: Sequence[int], sup: Sequence[int]):
        if len(xhat) == 0:
            raise ValueError("x-hat must be non-empty")
        ids = np.asarray([xhat], dtype=np.int64)
        h_x = self.encode_context(ids, np.ones(ids.shape))
        sup_ids = np.asarray([list(sup) or [EOS_ID]], dtype=np.int64)
        mu, log_var = self.posterior(h_x, sup_ids, np.ones(sup_ids.shape))
        return mu.data[0], log_var.data[0]

    def mixture(self, z, topic_embeddings, topic_mask):
        """``alpha = softmax(proj(z))`` over the valid topic slots; ``t = sum alpha_k e_k``.

        Rows with no valid topic give ``t = 0`` and ``alpha = 0``.
        """
        z = ag.lift(z)
        B = z.shape[0]
        if not self.use_topics:
            return Tensor(np.zeros((B, self.embed_size))), Tensor(np.zeros((B, self.num_topics)))
        topic_embeddings = ag.lift(topic_embeddings)
        K = topic_embeddings.shape[1]
        scores = self.topic_proj(z)[:, :K]
        alpha = ag.softmax(scores, mask=topic_mask)
        t = ag.tsum(ag.reshape(alpha, (B, K, 1)) * topic_embeddings, axis=1)
        return t, alpha

    def topic_mixture(self, z, topic_ids, topic_mask=None):
        """Mixture over the embeddings of ``topic_ids`` (``(B, K)`` ids)."""
        topic_ids = np.asarray(topic_ids, dtype=np.int64)
        if topic_mask is None:
            topic_mask = np.ones(topic_ids.shape)
        if topic_ids.shape[1] == 0:
            B = ag.lift(z).shape[0]
            return Tensor(np.zeros((B, self.embed_size))), Tensor(np.zeros((B, 0)))
        return self.mixture(z, self.embed(topic_ids), topic_mask)

    def _init_state(self, h_x):
        return [br(h_x) for br in self.bridge]

    def decode_loss(self, batch: CvaeBatch, z, t, h_x):
        """Teacher-forced NLL of ``supplementary + [EOS]`` with ``[emb; z; t]`` step inputs."""
        tf = batch.forcing
        state = self._init_state(h_x)
        cond = ag.concat([z, t])
        loss = None
        for step in range(tf.steps):
            x = ag.concat([self.embed(tf.inputs[:, step]), cond])
            state = self.decoder.step(state, x)
            step_loss = ag.cross_entropy(self.output(state[-1]), tf.targets[:, step], tf.weights[:, step])
            loss = step_loss if loss is None else loss + step_loss
        return loss

    def bow_loss(self, z, h_x, bags):
        """Bag-of-words loss from one softmax over ``[z; h_x]``.

        Per example this is KL(uniform over the distinct content tokens ||
        predicted distribution): the mean NLL of those tokens minus
        ``log(n_tokens)``.  Examples without content tokens contribute 0.
        """
        B = len(bags)
        logp = ag.log_softmax(self.bow(ag.concat([z, h_x])))
        rows, cols, weights = [], [], []
        offset = 0.0
        for b, bag in enumerate(bags):
            if not bag:
                continue
            n = len(bag)
            rows.extend([b] * n)
            cols.extend(bag)
            weights.extend([1.0 / (n * B)] * n)
            offset += np.log(n) / B
        if not rows:
            return Tensor(np.asarray(0.0))
        picked = logp[np.asarray(rows), np.asarray(cols)]
        return -ag.tsum(picked * np.asarray(weights)) - offset

    def elbo_terms(self, batch: CvaeBatch, eps):
        """``(recon, kl, bow)`` tensors for a batch; ``eps`` is the ``(B, Z)`` posterior noise."""
        h_x = self.encode_context(batch.xhat_ids, batch.xhat_mask)
        mu, log_var = self.prior(h_x)
        if self.use_latent:
            mu_q, log_var_q = self.posterior(h_x, batch.sup_ids, batch.sup_mask)
            z = reparameterize(mu_q, log_var_q, np.asarray(eps, dtype=np.float64))
            kl = ag.tsum(kl_divergence(mu, log_var, mu_q, log_var_q)) * (1.0 / batch.size)
        else:
            z = mu
            kl = Tensor(np.asarray(0.0))
        t, _ = self.topic_mixture(z, batch.topic_ids, batch.topic_mask)
        recon = self.decode_loss(batch, z, t, h_x)
        bow = self.bow_loss(z, h_x, batch.bags)
        return recon, kl, bow

    def elbo_step(self, batch: CvaeBatch, kl_weight: float, eps):
        """Annealed negative ELBO plus BOW: ``recon + kl_weight * kl + bow``.

        Returns ``(total, parts)``; ``parts`` holds floats for logging.
        """
        recon, kl, bow = self.elbo_terms(batch, eps)
        total = recon + kl * kl_weight + bow
        parts = {
            "recon": float(recon.data),
            "kl": float(kl.data),
            "bow": float(bow.data),
            "kl_weight": float(kl_weight),
            "total": float(total.data),
        }
        return total, parts

    def generate(self, xhat: Sequence[int], topic_ids: Sequence[int], eps, max_len: int = 30) -> list[int]:
        """Greedy decoding from a prior draw; an immediate EOS yields ``[]``."""
        was_training = self.training
        self.eval()
        try:
            ids = np.asarray([xhat], dtype=np.int64)
            h_x = self.encode_context(ids, np.ones(ids.shape))
            mu, log_var = self.prior(h_x)
            if self.use_latent:
                z = reparameterize(mu, log_var, np.asarray(eps, dtype=np.float64).reshape(1, -1))
            else:
                z = mu
            topic_ids = list(topic_ids)[: self.num_topics]
            t, _ = self.topic_mixture(z, np.asarray([topic_ids], dtype=np.int64).reshape(1, -1))
            cond = ag.concat([z, t])
            state = self._init_state(h_x)
            prev, out = BOS_ID, []
            while len(out) < max_len:
                x = ag.concat([self.embed(np.array([prev])), cond])
                state = self.decoder.step(state, x)
                logits = self.output(state[-1]).data[0].copy()
                logits[list(BANNED_IDS)] = -np.inf
                prev = int(np.argmax(logits))
                if prev == EOS_ID:
                    break
                out.append(prev)
            return out
        finally:
            self.train(was_training)
