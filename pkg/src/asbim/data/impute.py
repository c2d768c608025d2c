"""Stochastic regression imputation of missing T2 outcomes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ImputationError
from .records import ProcessedDyad

MIN_COMPLETE_CASES = 3


def outcome_design(dyads) -> np.ndarray:
    """Columns: intercept, T1, gender, mother person mean, child person mean."""
    return np.array(
        [[1.0, d.ext_t1, float(d.gender), d.mother_mean, d.child_mean] for d in dyads],
        dtype=np.float64,
    ).reshape(-1, 5)


@dataclass
class OutcomeModel:
    coef: np.ndarray
    residual_sd: float
    n_complete: int

    def predict(self, dyads) -> np.ndarray:
        return outcome_design(dyads) @ self.coef


def fit_outcome_model(dyads) -> OutcomeModel:
    complete = [d for d in dyads if d.ext_t2 is not None]
    if len(complete) < MIN_COMPLETE_CASES:
        raise ImputationError(
            f"need at least {MIN_COMPLETE_CASES} dyads with observed T2, have {len(complete)}"
        )
    X = outcome_design(complete)
    y = np.array([d.ext_t2 for d in complete])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = max(len(complete) - X.shape[1], 1)
    return OutcomeModel(coef, float(np.sqrt(resid @ resid / dof)), len(complete))


def impute_outcomes(
    dataset: list[ProcessedDyad],
    m: int = 10,
    rng: np.random.Generator | None = None,
    noise_scale: float = 1.0,
) -> list[list[ProcessedDyad]]:
    """Return ``m`` completed copies of ``dataset``.

    Observed T2 values are passed through untouched (the same objects);
    missing ones get regression prediction + N(0, residual sd) noise,
    clipped to [0, 2], with an independent draw for every copy.
    ``noise_scale=0`` gives deterministic regression imputation.
    """
    if m < 1:
        raise ImputationError("m must be >= 1")
    missing = [i for i, d in enumerate(dataset) if d.ext_t2 is None]
    if not missing:
        return [list(dataset) for _ in range(m)]
    model = fit_outcome_model(dataset)
    rng = rng if rng is not None else np.random.default_rng()
    centre = model.predict([dataset[i] for i in missing])
    noise = rng.standard_normal((m, len(missing)))
    out = []
    for j in range(m):
        values = np.clip(centre + noise_scale * model.residual_sd * noise[j], 0.0, 2.0)
        filled = list(dataset)
        for i, v in zip(missing, values):
            filled[i] = dataset[i].with_t2(float(v))
        out.append(filled)
    return out
