"""Direct responding semantics generator: GRU encoder-decoder with additive attention."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .batching import DrsgBatch
from .corpus import BOS_ID, EOS_ID, PAD_ID, SEP_ID
from .nn import autograd as ag
from .nn.layers import Attention, Linear, Module, ParameterStore, StackedGru

BANNED_IDS = (PAD_ID, BOS_ID, SEP_ID)


class DrsgModel(Module):
    def __init__(
        self,
        store: ParameterStore,
        vocab_size: int,
        embed_size: int = 32,
        hidden_size: int = 64,
        num_layers: int = 2,
        name: str = "drsg",
    ):
        super().__init__(store, name)
        self.vocab_size = vocab_size
        self.embed_size = embed_size
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        store.add(f"{name}.embedding", (vocab_size, embed_size))
        self.encoder = StackedGru(store, f"{name}.encoder", embed_size, hidden_size, num_layers)
        self.bridge = [Linear(store, f"{name}.bridge{i}", hidden_size, hidden_size) for i in range(num_layers)]
        self.attention = Attention(store, f"{name}.attention", hidden_size, hidden_size)
        self.decoder = StackedGru(
            store, f"{name}.decoder", embed_size + hidden_size, hidden_size, num_layers
        )
        self.output = Linear(store, f"{name}.output", hidden_size, vocab_size)

    def embed(self, ids):
        return ag.embedding(self.p("embedding"), ids)

    def encode_batch(self, post_ids, post_mask):
        return self.encoder.encode(self.embed(post_ids), post_mask)

    def encode(self, post: Sequence[int]):
        """Top-layer states ``(T, H)`` and per-layer final states for one post."""
        if len(post) == 0:
            raise ValueError("cannot encode an empty post")
        ids = np.asarray([post], dtype=np.int64)
        states, finals = self.encode_batch(ids, np.ones(ids.shape))
        return states.data[0], [f.data[0] for f in finals]

    def _decode_steps(self, batch: DrsgBatch, collect=False):
        states_enc, finals = self.encode_batch(batch.post_ids, batch.post_mask)
        enc_proj = self.attention.precompute(states_enc)
        state = [br(f) for br, f in zip(self.bridge, finals)]
        tf = batch.forcing
        loss = None
        dists = []
        for t in range(tf.steps):
            context, _ = self.attention(state[-1], states_enc, batch.post_mask, enc_proj)
            x = ag.concat([self.embed(tf.inputs[:, t]), context])
            state = self.decoder.step(state, x)
            logits = self.output(state[-1])
            if collect:
                dists.append(ag.softmax_array(logits.data))
            step_loss = ag.cross_entropy(logits, tf.targets[:, t], tf.weights[:, t])
            loss = step_loss if loss is None else loss + step_loss
        return loss, dists

    def batch_loss(self, batch: DrsgBatch):
        """Mean over the batch of each pair's mean token NLL of ``direct + [EOS]``."""
        return self._decode_steps(batch)[0]

    def loss(self, post: Sequence[int], direct: Sequence[int]):
        return self.batch_loss(DrsgBatch.build([list(post)], [list(direct)]))

    def step_distributions(self, post, direct) -> list[np.ndarray]:
        """Teacher-forced output distributions, one ``(V,)`` array per target step."""
        _, dists = self._decode_steps(DrsgBatch.build([list(post)], [list(direct)]), collect=True)
        return [d[0] for d in dists]

    def generate(self, post: Sequence[int], max_len: int = 30) -> list[int]:
        """Greedy decoding from BOS until EOS or ``max_len`` tokens (EOS not returned)."""
        if max_len <= 0:
            return []
        was_training = self.training
        self.eval()
        try:
            ids = np.asarray([post], dtype=np.int64)
            mask = np.ones(ids.shape)
            states_enc, finals = self.encode_batch(ids, mask)
            enc_proj = self.attention.precompute(states_enc)
            state = [br(f) for br, f in zip(self.bridge, finals)]
            prev = BOS_ID
            out = []
            while len(out) < max_len:
                context, _ = self.attention(state[-1], states_enc, mask, enc_proj)
                x = ag.concat([self.embed(np.array([prev])), context])
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
