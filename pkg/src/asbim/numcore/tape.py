"""A small reverse-mode gradient tape over float64 numpy arrays.

Operations append nodes to the tape that owns their inputs; ``Tape.gradient``
walks the record backwards. Only what the model needs is supported: scalars
broadcast against arrays, nothing else does.

>>> tape = Tape()
>>> theta = tape.watch(3.0, "theta")
>>> loss = theta * theta
>>> tape.gradient(loss, {"theta": theta})["theta"]
array(6.)
"""

from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import ConfigurationError, EmptySequenceError, TapeError
from . import ops


class Tensor:
    __slots__ = ("tape", "value", "index", "name")

    def __init__(self, tape: "Tape", value: np.ndarray, index: int, name: str | None = None):
        self.tape = tape
        self.value = value
        self.index = index
        self.name = name

    @property
    def shape(self):
        return self.value.shape

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

    def __repr__(self):
        return f"Tensor(name={self.name!r}, shape={self.value.shape})"


class Tape:
    """Wengert list: each entry is (output index, [(input index, vjp)])."""

    def __init__(self):
        self._nodes: list[list[tuple[int, Callable[[np.ndarray], np.ndarray]]]] = []
        self._values: list[np.ndarray] = []

    def _record(self, value, parents) -> Tensor:
        value = np.asarray(value, dtype=np.float64)
        idx = len(self._values)
        self._values.append(value)
        self._nodes.append(parents)
        return Tensor(self, value, idx)

    def watch(self, value, name: str | None = None) -> Tensor:
        """Register a leaf whose gradient may be requested."""
        t = self._record(np.array(value, dtype=np.float64), [])
        t.name = name
        return t

    def constant(self, value) -> Tensor:
        return self._record(np.array(value, dtype=np.float64), [])

    def gradient(self, output: Tensor, params: Mapping[str, Tensor]) -> dict[str, np.ndarray]:
        if not isinstance(output, Tensor) or output.tape is not self:
            raise TapeError("output was not computed on this tape")
        if output.value.shape != ():
            raise ConfigurationError("gradient requires a scalar output")
        for name, p in params.items():
            if not isinstance(p, Tensor) or p.tape is not self:
                raise TapeError(f"parameter {name!r} is not on this tape")
        adj: list[np.ndarray | None] = [None] * (output.index + 1)
        adj[output.index] = np.array(1.0)
        for idx in range(output.index, -1, -1):
            g = adj[idx]
            if g is None:
                continue
            for parent, vjp in self._nodes[idx]:
                contrib = vjp(g)
                adj[parent] = contrib if adj[parent] is None else adj[parent] + contrib
        out = {}
        for name, p in params.items():
            g = adj[p.index] if p.index < len(adj) else None
            out[name] = np.zeros_like(p.value) if g is None else np.asarray(g, dtype=np.float64)
        return out


def _lift(tape: Tape, x) -> Tensor:
    if isinstance(x, Tensor):
        if x.tape is not tape:
            raise TapeError("tensors from different tapes cannot be combined")
        return x
    return tape.constant(x)


def _pair(a, b) -> tuple[Tensor, Tensor]:
    tape = a.tape if isinstance(a, Tensor) else b.tape
    return _lift(tape, a), _lift(tape, b)


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    if g.shape == shape:
        return g
    if shape == ():
        return np.asarray(g.sum())
    raise ConfigurationError(f"cannot reduce gradient of shape {g.shape} to {shape}")


def _check_shapes(a: Tensor, b: Tensor):
    if a.shape != b.shape and a.shape != () and b.shape != ():
        raise ConfigurationError(f"shape mismatch {a.shape} vs {b.shape}")


def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    _check_shapes(a, b)
    return a.tape._record(
        a.value + b.value,
        [(a.index, lambda g, s=a.shape: _unbroadcast(g, s)),
         (b.index, lambda g, s=b.shape: _unbroadcast(g, s))],
    )


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    _check_shapes(a, b)
    return a.tape._record(
        a.value - b.value,
        [(a.index, lambda g, s=a.shape: _unbroadcast(g, s)),
         (b.index, lambda g, s=b.shape: _unbroadcast(-g, s))],
    )


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    _check_shapes(a, b)
    av, bv = a.value, b.value
    return a.tape._record(
        av * bv,
        [(a.index, lambda g: _unbroadcast(g * bv, av.shape)),
         (b.index, lambda g: _unbroadcast(g * av, bv.shape))],
    )


def matvec(W: Tensor, x: Tensor) -> Tensor:
    W, x = _pair(W, x)
    if W.value.ndim != 2 or x.value.ndim != 1 or W.shape[1] != x.shape[0]:
        raise ConfigurationError(f"matvec: W{W.shape} and x{x.shape} do not conform")
    Wv, xv = W.value, x.value
    return W.tape._record(
        Wv @ xv,
        [(W.index, lambda g: np.outer(g, xv)), (x.index, lambda g: Wv.T @ g)],
    )


def dot(a: Tensor, b: Tensor) -> Tensor:
    a, b = _pair(a, b)
    if a.value.ndim != 1 or a.shape != b.shape:
        raise ConfigurationError("dot needs two vectors of equal length")
    av, bv = a.value, b.value
    return a.tape._record(
        np.dot(av, bv),
        [(a.index, lambda g: g * bv), (b.index, lambda g: g * av)],
    )


def relu(a: Tensor) -> Tensor:
    gate = (a.value > 0).astype(np.float64)
    return a.tape._record(ops.relu(a.value), [(a.index, lambda g: g * gate)])


def square(a: Tensor) -> Tensor:
    av = a.value
    return a.tape._record(av * av, [(a.index, lambda g: 2.0 * g * av)])


def sum_all(a: Tensor) -> Tensor:
    shape = a.shape
    return a.tape._record(a.value.sum(), [(a.index, lambda g: np.full(shape, float(g)))])


def gamma(logit: Tensor) -> Tensor:
    """Clipped sigmoid, matching ``ops.gamma_from_logit``."""
    z = float(logit.value)
    slope = ops.gamma_slope(z)
    return logit.tape._record(ops.gamma_from_logit(z), [(logit.index, lambda g: g * slope)])


def row(M: Tensor, i: int) -> Tensor:
    if not 0 <= i < M.shape[0]:
        raise ConfigurationError(f"row index {i} out of range for {M.shape[0]} rows")
    shape = M.shape

    def vjp(g):
        out = np.zeros(shape)
        out[i] = g
        return out

    return M.tape._record(M.value[i].copy(), [(M.index, vjp)])


def stack(items: Sequence[Tensor]) -> Tensor:
    """Stack scalar tensors into a vector."""
    if not items:
        raise ConfigurationError("stack of nothing")
    tape = items[0].tape
    items = [_lift(tape, t) for t in items]
    parents = [(t.index, lambda g, k=k: np.asarray(g[k])) for k, t in enumerate(items)]
    return tape._record(np.array([float(t.value) for t in items]), parents)


def index(v: Tensor, i: int) -> Tensor:
    n = v.shape[0]

    def vjp(g):
        out = np.zeros(n)
        out[i] = g
        return out

    return v.tape._record(v.value[i], [(v.index, vjp)])


def masked_softmax(scores: Tensor, mask) -> Tensor:
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        raise EmptySequenceError("masked_softmax: every position is masked")
    a = ops.masked_softmax(scores.value, m)

    def vjp(g):
        return a * (g - math.fsum(a * g))

    return scores.tape._record(a, [(scores.index, vjp)])


def mean(vectors: Sequence[Tensor]) -> Tensor:
    acc = vectors[0]
    for v in vectors[1:]:
        acc = acc + v
    return acc * (1.0 / len(vectors))


def gradients(loss: Tensor, params: Mapping[str, Tensor]) -> dict[str, np.ndarray]:
    """d loss / d param for every named leaf in ``params``."""
    if not isinstance(loss, Tensor):
        raise TapeError("loss is not a tape tensor")
    return loss.tape.gradient(loss, params)
