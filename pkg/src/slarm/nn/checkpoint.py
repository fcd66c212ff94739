"""Binary checkpoint format.

Layout::

    SLARM-CKPT v1\\n
    step <t>\\n
    count <n>\\n
    then n records, each  "<kind> <name> <ndim> <d0> <d1> ...\\n" + raw '<f8' bytes

``kind`` is ``param``, ``adam_m`` or ``adam_v``.  Parameter names carry the
component prefix (``drsg.`` or ``tgg_cvae.``).
"""

from __future__ import annotations

import io
import os

import numpy as np

from .layers import ParameterStore
from .optim import Adam

MAGIC = b"SLARM-CKPT v1\n"


class CheckpointError(ValueError):
    pass


def _records(store: ParameterStore, optimizer: Adam | None):
    for name, value in store.params.items():
        yield "param", name, value
    if optimizer is not None:
        for name in store.params:
            yield "adam_m", name, optimizer.m[name]
        for name in store.params:
            yield "adam_v", name, optimizer.v[name]


def dumps(store: ParameterStore, optimizer: Adam | None = None) -> bytes:
    records = list(_records(store, optimizer))
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(f"step {optimizer.t if optimizer else 0}\n".encode())
    buf.write(f"count {len(records)}\n".encode())
    for kind, name, value in records:
        dims = " ".join(str(d) for d in value.shape)
        buf.write(f"{kind} {name} {value.ndim} {dims}\n".encode())
        buf.write(np.ascontiguousarray(value, dtype="<f8").tobytes())
    return buf.getvalue()


def save_checkpoint(path, store: ParameterStore, optimizer: Adam | None = None) -> None:
    data = dumps(store, optimizer)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _readline(buf) -> str:
    line = buf.readline()
    if not line.endswith(b"\n"):
        raise CheckpointError("truncated checkpoint header")
    return line.decode().rstrip("\n")


def loads(data: bytes, store: ParameterStore, optimizer: Adam | None = None) -> int:
    """Fill ``store`` (and ``optimizer`` moments) in place; returns the step counter."""
    buf = io.BytesIO(data)
    if buf.readline() != MAGIC:
        raise CheckpointError("not a SLARM checkpoint")
    try:
        step = int(_readline(buf).split()[1])
        count = int(_readline(buf).split()[1])
    except (IndexError, ValueError) as exc:
        raise CheckpointError("malformed checkpoint header") from exc
    targets = {"param": store.params}
    if optimizer is not None:
        targets["adam_m"] = optimizer.m
        targets["adam_v"] = optimizer.v
    seen = set()
    for _ in range(count):
        parts = _readline(buf).split()
        kind, name, ndim = parts[0], parts[1], int(parts[2])
        shape = tuple(int(d) for d in parts[3 : 3 + ndim])
        nbytes = 8 * int(np.prod(shape, dtype=np.int64))
        raw = buf.read(nbytes)
        if len(raw) != nbytes:
            raise CheckpointError(f"truncated data for {kind} {name}")
        if kind not in targets:
            continue
        dest = targets[kind]
        if name not in dest:
            raise CheckpointError(f"unknown parameter {name!r} in checkpoint")
        if dest[name].shape != shape:
            raise CheckpointError(f"shape mismatch for {name}: {shape} vs {dest[name].shape}")
        dest[name][...] = np.frombuffer(raw, dtype="<f8").reshape(shape)
        seen.add((kind, name))
    missing = [n for n in store.params if ("param", n) not in seen]
    if missing:
        raise CheckpointError(f"checkpoint lacks parameters: {missing[:3]}")
    if optimizer is not None:
        optimizer.t = step
    return step


def load_checkpoint(path, store: ParameterStore, optimizer: Adam | None = None) -> int:
    with open(path, "rb") as fh:
        return loads(fh.read(), store, optimizer)
