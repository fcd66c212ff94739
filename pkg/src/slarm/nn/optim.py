import math

import numpy as np

from .layers import ParameterStore


class TrainingError(RuntimeError):
    pass


class Adam:
    """Adam with bias correction over every parameter in a store.

    Moments live here (not in the store) so they can be checkpointed
    alongside the step counter.
    """

    def __init__(self, store: ParameterStore, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p) for name, p in store.params.items()}
        self.v = {name: np.zeros_like(p) for name, p in store.params.items()}

    def step(self, skip=()):
        """Update every parameter whose name does not start with a prefix in ``skip``."""
        for name, g in self.store.grads.items():
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient in parameter {name!r}")
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name, p in self.store.params.items():
            if skip and name.startswith(tuple(skip)):
                continue
            g = self.store.grads[name]
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        self.store.zero_grad()


def adam_step(store, optimizer: Adam | None = None, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """Apply one Adam update to ``store`` and zero its gradients.

    A fresh optimizer is created when none is passed, which is only useful
    for a single isolated step.
    """
    if optimizer is None:
        optimizer = Adam(store, lr=lr, beta1=beta1, beta2=beta2, eps=eps)
    optimizer.step()
    return optimizer


def global_norm(store: ParameterStore) -> float:
    return math.sqrt(sum(float(np.vdot(g, g)) for g in store.grads.values()))


def clip_gradients(store: ParameterStore, max_norm: float) -> float:
    """Rescale all gradients so their joint L2 norm is at most ``max_norm``.

    Returns the factor that was applied (1.0 when no clipping happened).
    """
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    norm = global_norm(store)
    if norm <= max_norm:
        return 1.0
    factor = max_norm / norm
    for g in store.grads.values():
        g *= factor
    return factor
