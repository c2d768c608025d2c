"""Batched loss/gradient kernels with a compiled fast path.

The Cython extension ``_fused`` is used when it imports; otherwise the numpy
implementation in ``fused_py`` is. ``ASBIM_BACKEND=python`` forces the
fallback. Both take and return the same arrays.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..model.params import ModelParameters, is_weight, require_variant_features
from . import fused_py

try:
    from . import _fused as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": fused_py.fused}
if _compiled is not None:
    BACKENDS["cython"] = _compiled.fused

_requested = os.environ.get("ASBIM_BACKEND", "").strip().lower()
if _requested and _requested not in ("python", "cython"):
    raise ImportError(f"ASBIM_BACKEND={_requested!r}: expected 'python' or 'cython'")
BACKEND = "python" if _requested == "python" or _compiled is None else "cython"


def available_backends() -> list[str]:
    return list(BACKENDS)


def _get(backend: str | None):
    name = backend or BACKEND
    if name not in BACKENDS:
        raise ConfigurationError(f"kernel backend {name!r} is not available ({available_backends()})")
    return BACKENDS[name]


@dataclass
class Batch:
    """Dense arrays for N dyads padded to a common length."""

    ids: list
    x_num: np.ndarray   # (N, F) scaled numerical features
    gender: np.ndarray  # (N,) int64
    dm: np.ndarray      # (N, L) centred mother ratings, 0 on padding
    dc: np.ndarray      # (N, L) centred child ratings, 0 on padding
    mask: np.ndarray    # (N, L) uint8
    t1: np.ndarray
    y: np.ndarray | None

    def __len__(self):
        return len(self.ids)


def make_batch(dyads, params: ModelParameters, require_y: bool = True) -> Batch:
    dyads = list(dyads)
    if not dyads:
        raise ConfigurationError("empty batch")
    require_variant_features(dyads, params.variant)
    lengths = {d.max_len for d in dyads}
    if len(lengths) != 1:
        raise ConfigurationError(f"dyads padded to different lengths: {sorted(lengths)}")
    has_y = all(d.ext_t2 is not None for d in dyads)
    if require_y and not has_y:
        missing = [d.dyad_id for d in dyads if d.ext_t2 is None]
        raise ConfigurationError(f"T2 outcome missing for {missing[:5]}")
    return Batch(
        ids=[d.dyad_id for d in dyads],
        x_num=np.ascontiguousarray(params.scaler.transform(dyads)),
        gender=np.array([d.gender for d in dyads], dtype=np.int64),
        dm=np.ascontiguousarray([d.mother_dev for d in dyads], dtype=np.float64),
        dc=np.ascontiguousarray([d.child_dev for d in dyads], dtype=np.float64),
        mask=np.ascontiguousarray([d.mask for d in dyads], dtype=np.uint8),
        t1=np.array([d.ext_t1 for d in dyads], dtype=np.float64),
        y=np.array([d.ext_t2 for d in dyads], dtype=np.float64) if has_y else None,
    )


def _pack(params: ModelParameters) -> tuple:
    a = params.arrays
    c = np.ascontiguousarray
    phi_num = c(np.stack([a[f"phi_{n}"] for n in params.variant.numeric_features]))
    return (phi_num, c(a["phi_gender"]), c(a["W1"]), c(a["b1"]), c(a["W2"]), c(a["b2"]),
            a["gamma_logit"], c(a["F1_W"]), c(a["F1_b"]), c(a["F2_W"]), c(a["F2_b"]),
            c(a["F3_W"]), c(a["F3_b"]), c(a["W3"][0]), a["b3"])


def _unpack(grads: tuple, params: ModelParameters) -> dict[str, np.ndarray]:
    (g_phi_num, g_phi_g, g_W1, g_b1, g_W2, g_b2, g_gl,
     g_F1, g_c1, g_F2, g_c2, g_F3, g_c3, g_w3, g_b3) = grads
    out = {f"phi_{n}": g_phi_num[k] for k, n in enumerate(params.variant.numeric_features)}
    out.update({
        "phi_gender": g_phi_g, "W1": g_W1, "b1": g_b1, "W2": g_W2, "b2": g_b2,
        "gamma_logit": np.asarray(g_gl, dtype=np.float64).reshape(()),
        "F1_W": g_F1, "F1_b": g_c1, "F2_W": g_F2, "F2_b": g_c2, "F3_W": g_F3, "F3_b": g_c3,
        "W3": g_w3.reshape(1, -1), "b3": np.asarray(g_b3, dtype=np.float64).reshape(()),
    })
    return {name: out[name] for name in params.arrays}


def loss_and_grad(batch: Batch, params: ModelParameters, l2_coef: float = 0.0,
                  backend: str | None = None):
    """Return ``(loss, grads)`` with the L2 term on weights included."""
    if batch.y is None:
        raise ConfigurationError("loss needs T2 outcomes on every dyad")
    fn = _get(backend)
    data_loss, _, _, g = fn(batch.x_num, batch.gender, batch.dm, batch.dc, batch.mask,
                            batch.t1, batch.y, _pack(params), True)
    grads = _unpack(g, params)
    if l2_coef:
        for name, arr in params.arrays.items():
            if is_weight(name):
                grads[name] = grads[name] + (2.0 * l2_coef) * arr
    return data_loss + l2_coef * params.l2_penalty(), grads


def batch_loss(batch: Batch, params: ModelParameters, l2_coef: float = 0.0,
               backend: str | None = None) -> float:
    if batch.y is None:
        raise ConfigurationError("loss needs T2 outcomes on every dyad")
    fn = _get(backend)
    data_loss, _, _, _ = fn(batch.x_num, batch.gender, batch.dm, batch.dc, batch.mask,
                            batch.t1, batch.y, _pack(params), False)
    return data_loss + l2_coef * params.l2_penalty()


def forward(batch: Batch, params: ModelParameters, backend: str | None = None):
    """Return ``(predictions, attention)`` for every dyad in the batch."""
    fn = _get(backend)
    _, y_hat, alpha, _ = fn(batch.x_num, batch.gender, batch.dm, batch.dc, batch.mask,
                            batch.t1, None, _pack(params), False)
    return y_hat, alpha
