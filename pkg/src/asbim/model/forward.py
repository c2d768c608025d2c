"""Per-dyad forward pass, written step by step.

This path favours readability over speed; bulk training and prediction go
through :mod:`asbim.kernels`, which the test-suite holds to this one.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError, EmptySequenceError
from ..numcore import dense_forward, gamma_from_logit, masked_softmax, relu
from .params import ModelParameters, Variant, require_variant_features


def embed_feature(value, table: np.ndarray, categorical: bool = False) -> np.ndarray:
    """Row lookup for a categorical feature, scalar times vector for a numerical one."""
    table = np.asarray(table, dtype=np.float64)
    if categorical:
        idx = int(value)
        if idx != value or not 0 <= idx < table.shape[0]:
            raise ConfigurationError(f"category {value!r} out of range for a {table.shape[0]}-row table")
        return table[idx].copy()
    if not math.isfinite(value):
        raise ConfigurationError("numerical feature value is not finite")
    return float(value) * table


def individual_representation(vectors: Sequence[np.ndarray]) -> np.ndarray:
    if len(vectors) == 0:
        raise ConfigurationError("no feature vectors to average")
    acc = np.array(vectors[0], dtype=np.float64)
    for v in vectors[1:]:
        if np.shape(v) != acc.shape:
            raise ConfigurationError("feature vectors differ in dimension")
        acc = acc + v
    return acc / len(vectors)


def behavior_representation(side: str, s_i: float, s_bar: float, p: np.ndarray,
                            params: ModelParameters) -> np.ndarray:
    if side == "mother":
        W, b = params["W1"], params["b1"]
    elif side == "child":
        W, b = params["W2"], params["b2"]
    else:
        raise ConfigurationError(f"side must be 'mother' or 'child', got {side!r}")
    return (s_i - s_bar) * relu(dense_forward(p, W, b))


def interaction_representation(s_m: np.ndarray, s_c: np.ndarray, gamma_logit: float) -> np.ndarray:
    if np.shape(s_m) != np.shape(s_c):
        raise ConfigurationError("mother and child representations differ in dimension")
    g = gamma_from_logit(gamma_logit)
    return g * s_m + (1.0 - g) * s_c


def attention_pool(seq_reps: Sequence[np.ndarray], mask, params: ModelParameters):
    """Pool interaction representations into one vector.

    Returns ``(pooled, alpha)``. Each position is scored by the inner product
    of two projections of that same position, scaled by 1/sqrt(h).
    """
    mask = np.asarray(mask, dtype=bool)
    if len(seq_reps) != mask.shape[0]:
        raise ConfigurationError("one representation per position is required")
    if not mask.any():
        raise EmptySequenceError("attention_pool: every position is masked")
    h = params.h
    scores = np.zeros(mask.shape[0])
    projected = {}
    for i in np.flatnonzero(mask):
        u = dense_forward(seq_reps[i], params["F1_W"], params["F1_b"])
        v = dense_forward(seq_reps[i], params["F2_W"], params["F2_b"])
        w = dense_forward(seq_reps[i], params["F3_W"], params["F3_b"])
        scores[i] = np.dot(v, w) / math.sqrt(h)
        projected[i] = u
    alpha = masked_softmax(scores, mask)
    pooled = np.zeros(h)
    for i in np.flatnonzero(mask):
        pooled = pooled + alpha[i] * projected[i]
    return pooled, alpha


def feature_vectors(dyad, params: ModelParameters) -> list[np.ndarray]:
    names = params.variant.numeric_features
    scaled = params.scaler.transform([dyad])[0]
    vecs = [embed_feature(x, params[f"phi_{n}"]) for n, x in zip(names, scaled)]
    vecs.append(embed_feature(dyad.gender, params["phi_gender"], categorical=True))
    return vecs


def _check_variant(dyad, params: ModelParameters, variant):
    if variant is not None and Variant.parse(variant) is not params.variant:
        raise ConfigurationError(
            f"parameters are for variant {params.variant.value}, asked for {Variant.parse(variant).value}"
        )
    require_variant_features([dyad], params.variant)


def interaction_sequence(dyad, params: ModelParameters) -> list[np.ndarray]:
    p = individual_representation(feature_vectors(dyad, params))
    reps = []
    for i in range(dyad.max_len):
        if not dyad.mask[i]:
            reps.append(np.zeros(params.q))
            continue
        s_m = behavior_representation("mother", dyad.mother_seq[i], dyad.mother_mean, p, params)
        s_c = behavior_representation("child", dyad.child_seq[i], dyad.child_mean, p, params)
        reps.append(interaction_representation(s_m, s_c, float(params["gamma_logit"])))
    return reps


def attention_weights(dyad, params: ModelParameters, variant=None) -> np.ndarray:
    _check_variant(dyad, params, variant)
    _, alpha = attention_pool(interaction_sequence(dyad, params), dyad.mask, params)
    return alpha


def predict(dyad, params: ModelParameters, variant=None) -> float:
    """Predicted T2 outcome: linear head on the pooled pattern plus T1."""
    _check_variant(dyad, params, variant)
    pooled, _ = attention_pool(interaction_sequence(dyad, params), dyad.mask, params)
    return float(params["W3"][0] @ pooled) + float(params["b3"]) + dyad.ext_t1


def loss(dataset, params: ModelParameters, variant=None, l2_coef: float = 0.0) -> float:
    """Sum of squared errors plus ``l2_coef`` times the squared weights."""
    sq = []
    for d in dataset:
        if d.ext_t2 is None:
            raise ConfigurationError(f"dyad {d.dyad_id!r} has no T2 outcome")
        sq.append((predict(d, params, variant) - d.ext_t2) ** 2)
    return math.fsum(sq) + l2_coef * params.l2_penalty()
