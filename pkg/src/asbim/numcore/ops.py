"""Dense float64 primitives: affine maps, activations, masked softmax."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigurationError, EmptySequenceError, NumericalError


def as_vec(x, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ConfigurationError(f"{name} must be a non-empty 1-d array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NumericalError(f"{name} contains non-finite values")
    return v


def as_mat(x, name: str = "matrix") -> np.ndarray:
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise ConfigurationError(f"{name} must be a non-empty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"{name} contains non-finite values")
    return m


def dense_forward(x, W, b) -> np.ndarray:
    """Affine map ``W @ x + b`` with shape checks."""
    x = as_vec(x, "x")
    W = as_mat(W, "W")
    b = as_vec(b, "b")
    if W.shape[1] != x.shape[0] or W.shape[0] != b.shape[0]:
        raise ConfigurationError(
            f"dense_forward: W{W.shape} incompatible with x({x.shape[0]},) and b({b.shape[0]},)"
        )
    return W @ x + b


def relu(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def sigmoid(z):
    # two-branch form keeps exp() from overflowing for large |z|
    if np.ndim(z) == 0:
        z = float(z)
        if z >= 0:
            return 1.0 / (1.0 + math.exp(-z))
        ez = math.exp(z)
        return ez / (1.0 + ez)
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def masked_softmax(scores, mask) -> np.ndarray:
    """Softmax over the positions where ``mask`` is true; zero elsewhere.

    The normaliser is an exactly rounded sum (``math.fsum``), so appending
    masked positions leaves the unmasked outputs bit-for-bit unchanged.
    """
    s = np.asarray(scores, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    if s.shape != m.shape or s.ndim != 1:
        raise ConfigurationError("scores and mask must be 1-d arrays of equal length")
    if not m.any():
        raise EmptySequenceError("masked_softmax: every position is masked")
    live = s[m]
    if not np.all(np.isfinite(live)):
        raise NumericalError("masked_softmax: non-finite score")
    e = np.zeros_like(s)
    e[m] = np.exp(live - live.max())
    return e / math.fsum(e)


# sigmoid(36) < 1 in float64; beyond this the fused weight would round to exactly 1
GAMMA_LOGIT_BOUND = 36.0


def gamma_from_logit(logit: float) -> float:
    """Convex fusion weight, kept strictly inside (0, 1) in float64."""
    z = min(max(float(logit), -GAMMA_LOGIT_BOUND), GAMMA_LOGIT_BOUND)
    return sigmoid(z)


def gamma_slope(logit: float) -> float:
    """d gamma / d logit, zero where the logit is clipped."""
    z = float(logit)
    if abs(z) > GAMMA_LOGIT_BOUND:
        return 0.0
    g = sigmoid(z)
    return g * (1.0 - g)
