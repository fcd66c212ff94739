"""Parameter storage and the recurrent building blocks shared by both generators."""

from __future__ import annotations

import numpy as np

from . import autograd as ag
from .autograd import Tensor

INIT_SCALE = 0.08


class ShapeError(ValueError):
    pass


class ParameterStore:
    """Named float64 parameters, each paired with a same-shaped gradient buffer.

    Weights are drawn uniformly from ``[-INIT_SCALE, INIT_SCALE]`` in creation
    order from a seeded generator, so two stores built the same way with the
    same seed are bit-identical.
    """

    def __init__(self, seed: int = 0, init_scale: float = INIT_SCALE):
        self.seed = seed
        self.init_scale = init_scale
        self.rng = np.random.default_rng(seed)
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def add(self, name: str, shape, init: str = "uniform") -> str:
        if name in self.params:
            raise KeyError(f"duplicate parameter name {name!r}")
        shape = tuple(int(s) for s in shape)
        if init == "uniform":
            value = self.rng.uniform(-self.init_scale, self.init_scale, size=shape)
        elif init == "zeros":
            value = np.zeros(shape)
        else:
            raise ValueError(f"unknown init {init!r}")
        self.params[name] = value.astype(np.float64)
        self.grads[name] = np.zeros(shape)
        return name

    def tensor(self, name: str) -> Tensor:
        return Tensor(self.params[name], requires_grad=True, grad=self.grads[name])

    def frozen(self, name: str) -> Tensor:
        return Tensor(self.params[name])

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def names(self, prefix: str = "") -> list[str]:
        return [n for n in self.params if n.startswith(prefix)]

    def num_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def fill(self, value: float, prefix: str = "") -> None:
        for name in self.names(prefix):
            self.params[name].fill(value)

    def __contains__(self, name):
        return name in self.params

    def __len__(self):
        return len(self.params)


class Module:
    """Base for layers that pull their parameters from a store.

    ``training`` decides whether parameters enter the tape; generation flips
    it off so no graph is recorded.
    """

    def __init__(self, store: ParameterStore, name: str):
        self.store = store
        self.name = name
        self.training = True

    def p(self, suffix: str) -> Tensor:
        key = f"{self.name}.{suffix}"
        return self.store.tensor(key) if self.training else self.store.frozen(key)

    def children(self):
        return [v for v in vars(self).values() if isinstance(v, Module)] + [
            m for v in vars(self).values() if isinstance(v, list) for m in v if isinstance(m, Module)
        ]

    def train(self, mode: bool = True):
        self.training = mode
        for child in self.children():
            child.train(mode)
        return self

    def eval(self):
        return self.train(False)


class Linear(Module):
    def __init__(self, store, name, n_in, n_out, bias=True):
        super().__init__(store, name)
        self.n_in, self.n_out, self.bias = n_in, n_out, bias
        store.add(f"{name}.W", (n_in, n_out))
        if bias:
            store.add(f"{name}.b", (n_out,), init="zeros")

    def __call__(self, x):
        x = ag.lift(x)
        if x.shape[-1] != self.n_in:
            raise ShapeError(f"{self.name}: expected last dim {self.n_in}, got {x.shape}")
        out = x @ self.p("W")
        return out + self.p("b") if self.bias else out


class GruCell(Module):
    """Gated recurrent unit.

    Gate layout along the last axis of the fused weights is (update, reset,
    candidate); the reset gate multiplies the previous state before the
    hidden-path candidate weights are applied.
    """

    def __init__(self, store, name, input_size, hidden_size):
        super().__init__(store, name)
        self.input_size = input_size
        self.hidden_size = hidden_size
        H = hidden_size
        store.add(f"{name}.W", (input_size, 3 * H))
        store.add(f"{name}.U_zr", (H, 2 * H))
        store.add(f"{name}.U_h", (H, H))
        store.add(f"{name}.b", (3 * H,), init="zeros")

    def project(self, x):
        """Input-path pre-activations ``x W + b`` for any number of leading dims."""
        x = ag.lift(x)
        if x.shape[-1] != self.input_size:
            raise ShapeError(f"{self.name}: input size {x.shape[-1]} != {self.input_size}")
        return x @ self.p("W") + self.p("b")

    def step(self, h_prev, x=None, x_proj=None, mask=None):
        H = self.hidden_size
        h_prev = ag.lift(h_prev)
        if h_prev.shape[-1] != H:
            raise ShapeError(f"{self.name}: hidden size {h_prev.shape[-1]} != {H}")
        gx = self.project(x) if x_proj is None else x_proj
        zr = ag.sigmoid(gx[..., : 2 * H] + h_prev @ self.p("U_zr"))
        z = zr[..., :H]
        r = zr[..., H:]
        cand = ag.tanh(gx[..., 2 * H :] + (r * h_prev) @ self.p("U_h"))
        delta = z * (cand - h_prev)
        if mask is not None:
            delta = delta * mask
        return h_prev + delta


def gru_step(cell: GruCell, h_prev, x):
    """One recurrence: ``h = (1 - z) * h_prev + z * tanh(W_h x + U_h (r * h_prev) + b_h)``."""
    return cell.step(h_prev, x=x)


class StackedGru(Module):
    def __init__(self, store, name, input_size, hidden_size, num_layers):
        super().__init__(store, name)
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        self.cells = [
            GruCell(store, f"{name}.l{i}", input_size if i == 0 else hidden_size, hidden_size)
            for i in range(num_layers)
        ]

    def initial_state(self, batch):
        return [Tensor(np.zeros((batch, self.hidden_size))) for _ in self.cells]

    def encode(self, x_seq, mask=None, h0=None):
        """Run over a padded ``(B, T, D)`` sequence, layer by layer.

        Returns the top-layer output at every step stacked as ``(B, T, H)``
        and the final state of each layer.  Padded steps (mask 0) carry the
        previous state through unchanged.
        """
        x_seq = ag.lift(x_seq)
        B, T = x_seq.shape[0], x_seq.shape[1]
        if T == 0:
            raise ShapeError(f"{self.name}: empty sequence")
        step_masks = None
        if mask is not None:
            mask = np.asarray(mask, dtype=np.float64)
            step_masks = [mask[:, t : t + 1] for t in range(T)]
        states = h0 if h0 is not None else self.initial_state(B)
        finals = []
        layer_in = x_seq
        outputs = None
        for cell, h in zip(self.cells, states):
            proj = cell.project(layer_in)
            outputs = []
            for t in range(T):
                h = cell.step(h, x_proj=proj[:, t], mask=None if step_masks is None else step_masks[t])
                outputs.append(h)
            finals.append(h)
            layer_in = ag.stack(outputs, axis=1)
        return layer_in, finals

    def step(self, states, x, mask=None):
        new = []
        inp = x
        for cell, h in zip(self.cells, states):
            h = cell.step(h, x=inp, mask=mask)
            new.append(h)
            inp = h
        return new


class Attention(Module):
    """Additive attention: ``e_j = v . tanh(W_s s + U_h h_j)``, softmax over valid positions."""

    def __init__(self, store, name, query_size, key_size, attn_size=None):
        super().__init__(store, name)
        A = attn_size or key_size
        store.add(f"{name}.W_s", (query_size, A))
        store.add(f"{name}.U_h", (key_size, A))
        store.add(f"{name}.v", (A,))

    def precompute(self, enc_states):
        return ag.lift(enc_states) @ self.p("U_h")

    def __call__(self, s_prev, enc_states, mask=None, enc_proj=None):
        enc_states = ag.lift(enc_states)
        if enc_states.shape[1] == 0:
            raise ShapeError(f"{self.name}: attention over zero encoder states")
        if enc_proj is None:
            enc_proj = self.precompute(enc_states)
        B, T = enc_states.shape[0], enc_states.shape[1]
        query = ag.reshape(ag.lift(s_prev) @ self.p("W_s"), (B, 1, -1))
        scores = ag.tanh(enc_proj + query) @ self.p("v")
        weights = ag.softmax(scores, mask=mask)
        context = ag.tsum(ag.reshape(weights, (B, T, 1)) * enc_states, axis=1)
        return context, weights


def attention(attn: Attention, s_prev, enc_states):
    """Unbatched attention: ``s_prev`` is ``(H,)``, ``enc_states`` is ``(T, H)``."""
    enc_states = ag.lift(enc_states)
    if enc_states.ndim != 2 or enc_states.shape[0] == 0:
        raise ShapeError("attention needs a (T, H) matrix with T >= 1")
    s_prev = ag.lift(s_prev)
    context, weights = attn(
        ag.reshape(s_prev, (1, -1)), ag.reshape(enc_states, (1,) + enc_states.shape)
    )
    return ag.reshape(context, (-1,)), ag.reshape(weights, (-1,))


def softmax_xent(logits, target: int):
    """Cross-entropy of one logit vector against an integer target.

    Returns ``(loss, grad)`` where ``grad = softmax(logits) - onehot(target)``.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.size < 2:
        raise ShapeError("softmax_xent needs a 1-D logit vector with at least 2 entries")
    if not 0 <= int(target) < logits.size:
        raise IndexError(f"target {target} out of range for {logits.size} classes")
    shifted = logits - logits.max()
    log_z = np.log(np.exp(shifted).sum())
    probs = np.exp(shifted - log_z)
    grad = probs.copy()
    grad[target] -= 1.0
    return float(log_z - shifted[target]), grad
