"""The same forward pass recorded on a gradient tape.

Slow (one tape node per vector op per position) but independent of the
fused kernels, which makes it a second gradient route for the tests.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigurationError
from ..numcore import tape as T
from .params import ModelParameters, is_weight, require_variant_features


def loss_on_tape(dataset, params: ModelParameters, l2_coef: float = 0.0):
    """Return ``(tape, loss_tensor, leaf_tensors)``."""
    require_variant_features(dataset, params.variant)
    tape = T.Tape()
    leaf = {name: tape.watch(arr, name) for name, arr in params.arrays.items()}
    names = params.variant.numeric_features
    inv_sqrt_h = 1.0 / math.sqrt(params.h)
    gamma = T.gamma(leaf["gamma_logit"])
    one_minus_gamma = 1.0 - gamma
    total = None
    scaled = params.scaler.transform(dataset)
    for d, xs in zip(dataset, scaled):
        if d.ext_t2 is None:
            raise ConfigurationError(f"dyad {d.dyad_id!r} has no T2 outcome")
        vecs = [leaf[f"phi_{n}"] * float(x) for n, x in zip(names, xs)]
        vecs.append(T.row(leaf["phi_gender"], d.gender))
        p = T.mean(vecs)
        r1 = T.relu(T.matvec(leaf["W1"], p) + leaf["b1"])
        r2 = T.relu(T.matvec(leaf["W2"], p) + leaf["b2"])
        scores, us = [], []
        for i in np.flatnonzero(d.mask):
            s_m = r1 * float(d.mother_seq[i] - d.mother_mean)
            s_c = r2 * float(d.child_seq[i] - d.child_mean)
            s_mc = gamma * s_m + one_minus_gamma * s_c
            u = T.matvec(leaf["F1_W"], s_mc) + leaf["F1_b"]
            v = T.matvec(leaf["F2_W"], s_mc) + leaf["F2_b"]
            w = T.matvec(leaf["F3_W"], s_mc) + leaf["F3_b"]
            scores.append(T.dot(v, w) * inv_sqrt_h)
            us.append(u)
        alpha = T.masked_softmax(T.stack(scores), np.ones(len(scores), dtype=bool))
        pooled = None
        for k, u in enumerate(us):
            term = u * T.index(alpha, k)
            pooled = term if pooled is None else pooled + term
        w3 = T.row(leaf["W3"], 0)
        y_hat = T.dot(w3, pooled) + leaf["b3"] + float(d.ext_t1)
        err = T.square(y_hat - float(d.ext_t2))
        total = err if total is None else total + err
    penalty = None
    for name, t in leaf.items():
        if is_weight(name):
            term = T.sum_all(T.square(t))
            penalty = term if penalty is None else penalty + term
    total = total + penalty * float(l2_coef)
    return tape, total, leaf


def tape_loss_and_grad(dataset, params: ModelParameters, l2_coef: float = 0.0):
    tape, total, leaf = loss_on_tape(dataset, params, l2_coef)
    return float(total.value), tape.gradient(total, leaf)
