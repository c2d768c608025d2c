"""Comparison predictors: carrying T1 forward, and a two-stage lagged regression.

The two-stage model is a least-squares stand-in for the residual dynamic SEM:
stage 1 estimates each dyad's lagged associations from its own centred
series, stage 2 regresses T2 on those estimates plus the between-person
covariates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from .metrics import FoldAssignment, kfold_split

MIN_INTERVALS = 4

STAGE2_COLUMNS = ("intercept", "b_mc", "b_cm", "mother_mean", "child_mean", "ext_t1", "gender")


def baseline_t1_carry(dataset) -> np.ndarray:
    return np.array([d.ext_t1 for d in dataset], dtype=np.float64)


def ols(X: np.ndarray, y: np.ndarray):
    """Least squares; returns ``(coef, singular)``. Rank-deficient designs give zeros."""
    if X.shape[0] < X.shape[1] or np.linalg.matrix_rank(X) < X.shape[1]:
        return np.zeros(X.shape[1]), True
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef, False


@dataclass
class DyadLags:
    b_mc: float  # mother_{t-1} -> child_t
    b_cm: float  # child_{t-1} -> mother_t
    mc_flagged: bool = False
    cm_flagged: bool = False


def stage1_lags(dyad) -> DyadLags:
    """Per-dyad lagged coefficients from the centred observed series.

    child_t  ~ mother_{t-1} + child_{t-1}   -> coefficient on mother_{t-1}
    mother_t ~ child_{t-1} + mother_{t-1}   -> coefficient on child_{t-1}
    """
    n = dyad.n_observed
    if n < MIN_INTERVALS:
        return DyadLags(0.0, 0.0, True, True)
    m = dyad.mother_dev[:n]
    c = dyad.child_dev[:n]
    X_child = np.column_stack([m[:-1], c[:-1]])
    coef_c, sing_c = ols(X_child, c[1:])
    X_mother = np.column_stack([c[:-1], m[:-1]])
    coef_m, sing_m = ols(X_mother, m[1:])
    return DyadLags(float(coef_c[0]), float(coef_m[0]), sing_c, sing_m)


def stage2_design(dyads, lags: dict, include_ic: bool = False) -> np.ndarray:
    rows = []
    for d in dyads:
        lag = lags[d.dyad_id]
        row = [1.0, lag.b_mc, lag.b_cm, d.mother_mean, d.child_mean, d.ext_t1, float(d.gender)]
        if include_ic:
            if d.inhibitory_control is None:
                raise ConfigurationError(f"dyad {d.dyad_id!r} lacks inhibitory_control")
            row.append(d.inhibitory_control)
        rows.append(row)
    return np.array(rows, dtype=np.float64).reshape(len(rows), -1)


def stage2_fit(dyads, lags: dict, include_ic: bool = False) -> np.ndarray:
    X = stage2_design(dyads, lags, include_ic)
    y = np.array([d.ext_t2 for d in dyads], dtype=np.float64)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef


def stage2_columns(include_ic: bool) -> tuple:
    return STAGE2_COLUMNS + (("inhibitory_control",) if include_ic else ())


@dataclass
class TwoStageResult:
    predictions: dict            # dyad_id -> prediction on its held-out fold
    folds: FoldAssignment
    fold_coefs: list             # per fold: {column: value}
    full_coefs: dict             # fitted on every dyad
    lags: dict = field(default_factory=dict)

    @property
    def flagged(self) -> list:
        return [i for i, l in self.lags.items() if l.mc_flagged or l.cm_flagged]


def baseline_two_stage_lagged(dataset, k: int = 5, rng=None, folds: FoldAssignment | None = None,
                              include_ic: bool = False) -> TwoStageResult:
    dataset = list(dataset)
    if any(d.ext_t2 is None for d in dataset):
        raise ConfigurationError("two-stage baseline needs T2 on every dyad (impute first)")
    lags = {d.dyad_id: stage1_lags(d) for d in dataset}
    ids = [d.dyad_id for d in dataset]
    folds = folds if folds is not None else kfold_split(ids, k, rng)
    cols = stage2_columns(include_ic)
    preds, fold_coefs = {}, []
    for f in range(folds.k):
        train = [d for d in dataset if folds.fold_of[d.dyad_id] != f]
        test = [d for d in dataset if folds.fold_of[d.dyad_id] == f]
        coef = stage2_fit(train, lags, include_ic)
        fold_coefs.append(dict(zip(cols, coef.tolist())))
        for d, p in zip(test, stage2_design(test, lags, include_ic) @ coef):
            preds[d.dyad_id] = float(p)
    full = dict(zip(cols, stage2_fit(dataset, lags, include_ic).tolist()))
    return TwoStageResult(preds, folds, fold_coefs, full, lags)
