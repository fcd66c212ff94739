"""A small reverse-mode autodiff tape over float64 numpy arrays.

Only the operations the dialogue models need are provided.  A node records a
backward closure only when one of its inputs requires a gradient, so forward
passes over frozen parameters build no graph at all.
"""

import numpy as np

_BASIC_INDEX = (slice, int, np.integer, type(Ellipsis), type(None))


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, grad=None, parents=(), backward=None):
        self.data = data
        self.requires_grad = requires_grad
        self.grad = grad
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data)

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True).reshape(self.data.shape)
        else:
            self.grad += g

    def backward(self, seed=None):
        """Propagate gradients from this node to every leaf that requires one."""
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))

        self.accumulate(np.ones_like(self.data) if seed is None else seed)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                # free the graph as we go; leaves keep their buffers
                node._backward = None
                node._parents = ()
                node.grad = None

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)


def lift(x):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64))


def _make(data, parents, backward):
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, parents=parents, backward=backward)
    return Tensor(data)


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a, b):
    a, b = lift(a), lift(b)

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g, b.data.shape))

    return _make(a.data + b.data, (a, b), backward)


def sub(a, b):
    a, b = lift(a), lift(b)

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b.accumulate(-_unbroadcast(g, b.data.shape))

    return _make(a.data - b.data, (a, b), backward)


def mul(a, b):
    a, b = lift(a), lift(b)

    def backward(g):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _make(a.data * b.data, (a, b), backward)


def matmul(a, b):
    """``a @ b`` where ``b`` is a matrix or vector and ``a`` has any leading dims."""
    a, b = lift(a), lift(b)
    if b.ndim not in (1, 2):
        raise ValueError("right operand must be 1-D or 2-D")
    n = b.shape[0]
    if a.shape[-1] != n:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def backward(g):
        if b.ndim == 2:
            if a.requires_grad:
                a.accumulate(g @ b.data.T)
            if b.requires_grad:
                b.accumulate(a.data.reshape(-1, n).T @ g.reshape(-1, b.shape[1]))
        else:
            if a.requires_grad:
                a.accumulate(np.multiply.outer(g, b.data))
            if b.requires_grad:
                b.accumulate(a.data.reshape(-1, n).T @ g.reshape(-1))

    return _make(a.data @ b.data, (a, b), backward)


def getitem(a, idx):
    a = lift(a)
    key = idx if isinstance(idx, tuple) else (idx,)
    basic = all(isinstance(k, _BASIC_INDEX) for k in key)

    def backward(g):
        if a.grad is None:
            a.grad = np.zeros_like(a.data)
        if basic:
            a.grad[idx] += g
        else:
            np.add.at(a.grad, idx, g)

    return _make(a.data[idx], (a,), backward)


def embedding(table, ids):
    """Row lookup ``table[ids]`` for an integer array of any shape."""
    return getitem(table, np.asarray(ids, dtype=np.int64))


def reshape(a, shape):
    a = lift(a)

    def backward(g):
        a.accumulate(g.reshape(a.data.shape))

    return _make(a.data.reshape(shape), (a,), backward)


def concat(tensors, axis=-1):
    tensors = [lift(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    ax = axis % out.ndim
    bounds = np.cumsum([0] + [t.shape[ax] for t in tensors])

    def backward(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[ax] = slice(lo, hi)
                t.accumulate(g[tuple(sl)])

    return _make(out, tuple(tensors), backward)


def stack(tensors, axis=1):
    tensors = [lift(t) for t in tensors]
    out = np.stack([t.data for t in tensors], axis=axis)

    def backward(g):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t.accumulate(np.take(g, i, axis=axis))

    return _make(out, tuple(tensors), backward)


def tsum(a, axis=None, keepdims=False):
    a = lift(a)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a.accumulate(np.broadcast_to(g, a.data.shape))

    return _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward)


def sigmoid(a):
    a = lift(a)
    out = 0.5 * (1.0 + np.tanh(0.5 * a.data))

    def backward(g):
        a.accumulate(g * out * (1.0 - out))

    return _make(out, (a,), backward)


def tanh(a):
    a = lift(a)
    out = np.tanh(a.data)

    def backward(g):
        a.accumulate(g * (1.0 - out * out))

    return _make(out, (a,), backward)


def exp(a):
    a = lift(a)
    out = np.exp(a.data)

    def backward(g):
        a.accumulate(g * out)

    return _make(out, (a,), backward)


def softmax_array(x, mask=None, axis=-1):
    """Numerically stable softmax; rows whose mask is all zero come out as zeros."""
    if mask is None:
        shifted = x - x.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=axis, keepdims=True)
    mask = np.asarray(mask, dtype=bool)
    filled = np.where(mask, x, -np.inf)
    top = filled.max(axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    e = np.where(mask, np.exp(np.where(mask, x, 0.0) - top), 0.0)
    total = e.sum(axis=axis, keepdims=True)
    return np.divide(e, total, out=np.zeros_like(e), where=total > 0)


def softmax(a, mask=None, axis=-1):
    a = lift(a)
    out = softmax_array(a.data, mask, axis)

    def backward(g):
        a.accumulate(out * (g - (g * out).sum(axis=axis, keepdims=True)))

    return _make(out, (a,), backward)


def log_softmax(a, axis=-1):
    a = lift(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse

    def backward(g):
        a.accumulate(g - np.exp(out) * g.sum(axis=axis, keepdims=True))

    return _make(out, (a,), backward)


def cross_entropy(logits, targets, weights):
    """Weighted sum of ``-log softmax(logits)[target]`` over rows of a 2-D logit block."""
    logits = lift(logits)
    targets = np.asarray(targets, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    probs = softmax_array(logits.data)
    rows = np.arange(len(targets))
    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))
    nll = lse - shifted[rows, targets]
    loss = np.asarray(float(weights @ nll))

    def backward(g):
        grad = probs.copy()
        grad[rows, targets] -= 1.0
        logits.accumulate(g * weights[:, None] * grad)

    return _make(loss, (logits,), backward)
