"""Finite-difference gradient check on a small random instance."""

from __future__ import annotations

import numpy as np

from . import kernels, seeding
from .data.preprocess import preprocess
from .data.records import RawDyadObservation
from .model.params import FeatureScaler, ModelParameters, Variant, init_params, is_weight
from .numcore.gradcheck import GradCheckResult, finite_difference_check
from .numcore.ops import GAMMA_LOGIT_BOUND

GRADCHECK_TOL = 1e-4


def random_instance(seed: int, q: int = 8, h: int = 8, variant=Variant.PLUS_D, max_len: int = 10):
    """Two dyads (one of each gender) of different lengths and parameters with
    nonzero biases, so every parameter group receives a gradient."""
    variant = Variant.parse(variant)
    rng = seeding.stream(seed, seeding.GRADCHECK)
    raws = []
    for j, n in enumerate((int(rng.integers(4, max_len)), max_len + 3)):
        child = rng.random(n) < 0.4
        child[0], child[1] = True, False
        raws.append(RawDyadObservation(
            dyad_id=f"G{j}", gender=j,
            maut=tuple(float(v) for v in rng.uniform(0.0, 3.0, n)),
            cdef=tuple(float(v) * 2.0 for v in child),
            ext_t1=float(rng.uniform(0.2, 1.5)), ext_t2=float(rng.uniform(0.2, 1.5)),
            inhibitory_control=float(rng.uniform(2.0, 6.0)),
        ))
    dataset = preprocess(raws, max_len)
    params = init_params(variant, q, h, rng)
    params.scaler = FeatureScaler.fit(dataset, variant.numeric_features)
    arrays = params.arrays
    for name in arrays:
        if name.endswith("_b") or name in ("b1", "b2", "b3", "gamma_logit"):
            arrays[name] = arrays[name] + 0.5 * rng.standard_normal(arrays[name].shape)
    return dataset, params.replace_arrays(arrays)


def extended_loss(dataset, params: ModelParameters, arrays, l2_coef: float = 0.0):
    """Loss evaluated position by position in ``np.longdouble``.

    Used as the finite-difference oracle: with a 64-bit mantissa the rounding
    noise in ``(L(x+h) - L(x-h)) / 2h`` is far below the check tolerance even
    for partials near the relative-error floor.
    """
    ld = np.longdouble
    A = {k: np.asarray(v, dtype=ld) for k, v in arrays.items()}
    names = params.variant.numeric_features
    x_all = params.scaler.transform(dataset).astype(ld)
    gl = min(max(A["gamma_logit"], ld(-GAMMA_LOGIT_BOUND)), ld(GAMMA_LOGIT_BOUND))
    gam = 1 / (1 + np.exp(-gl))
    sqrt_h = np.sqrt(ld(params.h))
    total = ld(0)
    for d, xs in zip(dataset, x_all):
        p = sum((x * A[f"phi_{n}"] for n, x in zip(names, xs)), np.zeros(params.q, dtype=ld))
        p = (p + A["phi_gender"][d.gender]) / (len(names) + 1)
        r1 = np.maximum(A["W1"] @ p + A["b1"], 0)
        r2 = np.maximum(A["W2"] @ p + A["b2"], 0)
        us, scores = [], []
        for i in np.flatnonzero(d.mask):
            s = gam * (ld(d.mother_seq[i]) - ld(d.mother_mean)) * r1 \
                + (1 - gam) * (ld(d.child_seq[i]) - ld(d.child_mean)) * r2
            us.append(A["F1_W"] @ s + A["F1_b"])
            scores.append((A["F2_W"] @ s + A["F2_b"]) @ (A["F3_W"] @ s + A["F3_b"]) / sqrt_h)
        scores = np.array(scores, dtype=ld)
        e = np.exp(scores - scores.max())
        alpha = e / e.sum()
        pooled = sum((a * u for a, u in zip(alpha, us)), np.zeros(params.h, dtype=ld))
        y_hat = A["W3"][0] @ pooled + A["b3"] + ld(d.ext_t1)
        total += (y_hat - ld(d.ext_t2)) ** 2
    if l2_coef:
        total += ld(l2_coef) * sum(np.sum(v * v) for k, v in A.items() if is_weight(k))
    return total


def run_gradcheck(seed: int, q: int = 8, h: int = 8, variant=Variant.PLUS_D,
                  backend: str | None = None, l2_coef: float = 1e-3, step: float = 1e-5,
                  corrupt: bool = False) -> GradCheckResult:
    """Analytic kernel gradients against central differences of an
    extended-precision loss.

    ``corrupt`` perturbs one analytic entry; it exists so the check can be
    shown to fail.
    """
    dataset, params = random_instance(seed, q, h, variant)
    batch = kernels.make_batch(dataset, params)
    _, grads = kernels.loss_and_grad(batch, params, l2_coef, backend=backend)
    if corrupt:
        grads["W1"] = grads["W1"].copy()
        grads["W1"][0, 0] += 1e-2 * (1.0 + abs(grads["W1"][0, 0]))

    def fn(arrays):
        return extended_loss(dataset, params, arrays, l2_coef)

    return finite_difference_check(fn, params.arrays, grads, step=step)
