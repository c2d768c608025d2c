"""k-fold cross-validation over multiply imputed datasets."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .. import kernels, seeding
from ..data.impute import impute_outcomes
from ..data.preprocess import preprocess
from ..data.records import ProcessedDyad
from ..errors import ConfigurationError
from ..model.params import ModelParameters, Variant
from ..train import TrainConfig, train
from .baselines import baseline_t1_carry, stage1_lags, stage2_design, stage2_fit, stage2_columns
from .metrics import FoldAssignment, kfold_split, mse, pearson_r

ASBIM_MODELS = {"asbim": Variant.BASE, "asbim_d": Variant.PLUS_D}
BASELINE_MODELS = ("t1_carry", "two_stage", "two_stage_d")
ALL_MODELS = tuple(ASBIM_MODELS) + BASELINE_MODELS


@dataclass
class FoldFit:
    ids: list
    pred: np.ndarray
    alpha: np.ndarray | None = None
    gamma: float | None = None
    params: ModelParameters | None = None


@dataclass
class FoldMetric:
    model: str
    imputation: int
    fold: int
    n_test: int
    mse: float
    r: Optional[float]
    gamma: Optional[float] = None


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return math.fsum(xs) / len(xs) if xs else None


def _summary(xs):
    vals = [x for x in xs if x is not None]
    if not vals:
        return {"mean": None, "min": None, "max": None, "n": 0}
    return {"mean": math.fsum(vals) / len(vals), "min": min(vals), "max": max(vals), "n": len(vals)}


@dataclass
class EvaluationReport:
    config: dict
    folds: list = field(default_factory=list)          # FoldMetric
    predictions: list = field(default_factory=list)    # (model, dyad_id, imputation, fold, pred, obs)
    attention: list = field(default_factory=list)      # (model, dyad_id, imputation, position, alpha)
    fold_sizes: dict = field(default_factory=dict)     # imputation -> sizes
    two_stage_coefs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)         # (model, imputation, fold) -> params, not serialised

    @property
    def models(self) -> list:
        seen = []
        for f in self.folds:
            if f.model not in seen:
                seen.append(f.model)
        return seen

    def per_imputation(self, model: str) -> list[dict]:
        rows = {}
        for f in self.folds:
            if f.model == model:
                rows.setdefault(f.imputation, []).append(f)
        out = []
        for j in sorted(rows):
            fs = rows[j]
            out.append({
                "imputation": j,
                "mse": _mean([f.mse for f in fs]),
                "r": _mean([f.r for f in fs]),
                "r_missing_folds": sum(f.r is None for f in fs),
                "gamma": _mean([f.gamma for f in fs]),
            })
        return out

    def aggregate(self, model: str) -> dict:
        per = self.per_imputation(model)
        return {key: _summary([p[key] for p in per]) for key in ("mse", "r", "gamma")}

    def mean_mse(self, model: str) -> float:
        return self.aggregate(model)["mse"]["mean"]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "fold_sizes": {str(j): s for j, s in sorted(self.fold_sizes.items())},
            "folds": [vars(f).copy() for f in self.folds],
            "per_imputation": {m: self.per_imputation(m) for m in self.models},
            "aggregate": {m: self.aggregate(m) for m in self.models},
            "two_stage_coefficients": self.two_stage_coefs,
        }


def fit_fold(train_dyads: Sequence[ProcessedDyad], test_dyads: Sequence[ProcessedDyad],
             config: TrainConfig, rng: np.random.Generator,
             init_hook: Optional[Callable] = None, backend: str | None = None,
             keep_params: bool = False) -> FoldFit:
    """Train on ``train_dyads`` and predict ``test_dyads``."""
    params, _ = train(train_dyads, config, rng=rng, init_hook=init_hook, backend=backend)
    batch = kernels.make_batch(test_dyads, params, require_y=False)
    pred, alpha = kernels.forward(batch, params, backend=backend)
    return FoldFit(batch.ids, pred, alpha, params.gamma, params if keep_params else None)


def _fold_job(args):
    return fit_fold(*args)


def _split(dataset, folds: FoldAssignment, f: int):
    train_d = [d for d in dataset if folds.fold_of[d.dyad_id] != f]
    test_d = [d for d in dataset if folds.fold_of[d.dyad_id] == f]
    return train_d, test_d


def cross_validate(
    raw_dataset,
    train_config: TrainConfig | None = None,
    m_imputations: int = 10,
    k: int = 5,
    seed: int = 0,
    models: Sequence[str] = ("asbim", "t1_carry", "two_stage"),
    jobs: int = 1,
    init_hook: Optional[Callable] = None,
    backend: str | None = None,
    keep_params: bool = False,
    export_attention: bool = True,
) -> EvaluationReport:
    """Run the imputation x fold protocol and assemble a report.

    ``raw_dataset`` may hold raw observations or already processed dyads.
    Folds are redrawn per imputation from independent seed streams, and each
    ASBIM fold model is initialised from its own stream, so results do not
    depend on ``jobs`` or completion order.
    """
    config = train_config if train_config is not None else TrainConfig()
    models = list(dict.fromkeys(models))
    unknown = [mname for mname in models if mname not in ALL_MODELS]
    if unknown:
        raise ConfigurationError(f"unknown model(s) {unknown}; choose from {list(ALL_MODELS)}")
    if not models:
        raise ConfigurationError("no models requested")
    if m_imputations < 1:
        raise ConfigurationError("m_imputations must be >= 1")
    if jobs < 1:
        raise ConfigurationError("jobs must be >= 1")
    if jobs > 1 and init_hook is not None and getattr(init_hook, "__name__", "") == "<lambda>":
        raise ConfigurationError("init_hook must be a picklable top-level function when jobs > 1")

    dataset = list(raw_dataset)
    if dataset and not isinstance(dataset[0], ProcessedDyad):
        dataset = preprocess(dataset, config.max_len)
    ids = [d.dyad_id for d in dataset]
    if len(ids) < k:
        raise ConfigurationError(f"cannot split {len(ids)} dyads into {k} folds")

    imputed = impute_outcomes(dataset, m=m_imputations, rng=seeding.stream(seed, seeding.IMPUTE))
    fold_assignments = [kfold_split(ids, k, seeding.stream(seed, seeding.FOLDS, j))
                        for j in range(m_imputations)]

    report = EvaluationReport(config={
        "seed": seed, "k": k, "m_imputations": m_imputations, "models": models,
        "n_dyads": len(ids), "backend": backend or kernels.BACKEND,
        "train": {**config.to_dict(), "seed": seed},
    })
    for j, folds in enumerate(fold_assignments):
        report.fold_sizes[j] = folds.sizes()

    # ASBIM fold jobs, in a fixed order
    jobs_spec = []
    for mname in models:
        if mname not in ASBIM_MODELS:
            continue
        cfg = replace(config, variant=ASBIM_MODELS[mname], seed=seed)
        for j, (data_j, folds) in enumerate(zip(imputed, fold_assignments)):
            for f in range(k):
                train_d, test_d = _split(data_j, folds, f)
                rng = seeding.stream(seed, seeding.INIT, j, f)
                jobs_spec.append(((mname, j, f), (train_d, test_d, cfg, rng, init_hook, backend, keep_params)))
    if jobs > 1 and len(jobs_spec) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            fits = list(pool.map(_fold_job, [a for _, a in jobs_spec]))
    else:
        fits = [_fold_job(a) for _, a in jobs_spec]
    asbim_fits = {key: fit for (key, _), fit in zip(jobs_spec, fits)}

    lags_by_imp = None
    for mname in models:
        for j, (data_j, folds) in enumerate(zip(imputed, fold_assignments)):
            by_id = {d.dyad_id: d for d in data_j}
            if mname.startswith("two_stage") and lags_by_imp is None:
                # stage 1 uses only the behaviour series, which imputation does not touch
                lags_by_imp = {d.dyad_id: stage1_lags(d) for d in dataset}
            for f in range(k):
                train_d, test_d = _split(data_j, folds, f)
                gamma = None
                if mname in ASBIM_MODELS:
                    fit = asbim_fits[(mname, j, f)]
                    pred, gamma = fit.pred, fit.gamma
                    if keep_params:
                        report.params[(mname, j, f)] = fit.params
                    if export_attention:
                        for dyad_id, row in zip(fit.ids, fit.alpha):
                            for pos, a in enumerate(row, start=1):
                                report.attention.append((mname, dyad_id, j, pos, float(a)))
                elif mname == "t1_carry":
                    pred = baseline_t1_carry(test_d)
                else:
                    include_ic = mname == "two_stage_d"
                    coef = stage2_fit(train_d, lags_by_imp, include_ic)
                    pred = stage2_design(test_d, lags_by_imp, include_ic) @ coef
                obs = np.array([d.ext_t2 for d in test_d], dtype=np.float64)
                report.folds.append(FoldMetric(mname, j, f, len(test_d), mse(pred, obs),
                                               pearson_r(pred, obs), gamma))
                for d, p, o in zip(test_d, pred, obs):
                    report.predictions.append((mname, d.dyad_id, j, f, float(p), float(o)))
            if mname.startswith("two_stage"):
                include_ic = mname == "two_stage_d"
                coef = stage2_fit(data_j, lags_by_imp, include_ic)
                report.two_stage_coefs.setdefault(mname, []).append(
                    dict(zip(stage2_columns(include_ic), coef.tolist())))
    if lags_by_imp is not None:
        report.config["two_stage_flagged_dyads"] = sorted(
            i for i, l in lags_by_imp.items() if l.mc_flagged or l.cm_flagged)
    return report


@dataclass
class AttentionRecord:
    dyad_id: str
    alpha: np.ndarray
    gamma: float


def export_attention(dataset, params: ModelParameters, variant=None,
                     backend: str | None = None) -> list[AttentionRecord]:
    """Per-dyad attention weights (0 on padding) and the model's gamma."""
    if variant is not None and Variant.parse(variant) != params.variant:
        raise ConfigurationError(f"params were built for {params.variant.value}, not {Variant.parse(variant).value}")
    batch = kernels.make_batch(dataset, params, require_y=False)
    _, alpha = kernels.forward(batch, params, backend=backend)
    g = params.gamma
    return [AttentionRecord(i, a.copy(), g) for i, a in zip(batch.ids, alpha)]
