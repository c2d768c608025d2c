"""Full-batch Adam training."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import kernels, seeding
from .errors import ConfigurationError, NumericalError, TrainingError
from .model.params import FeatureScaler, ModelParameters, Variant, init_params as _init_params
from .model.params import require_variant_features


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 500
    l2_coef: float = 1e-4
    seed: int = 0
    variant: Variant = Variant.BASE
    q: int = 50
    h: int = 50
    max_len: int = 20

    def __post_init__(self):
        self.variant = Variant.parse(self.variant)
        self.validate()

    def validate(self):
        # lr = 0 is allowed: it freezes the parameters, which the tests use
        if not (self.learning_rate >= 0 and math.isfinite(self.learning_rate)):
            raise ConfigurationError("learning_rate must be >= 0")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1)")
        if not self.adam_eps > 0:
            raise ConfigurationError("adam_eps must be > 0")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ConfigurationError("epochs must be an integer >= 1")
        if self.l2_coef < 0:
            raise ConfigurationError("l2_coef must be >= 0")
        if self.q < 1 or self.h < 1 or self.max_len < 1:
            raise ConfigurationError("q, h and max_len must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variant"] = self.variant.value
        return d


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0


@dataclass
class TrainHistory:
    losses: list = field(default_factory=list)
    gammas: list = field(default_factory=list)
    final_loss: float = float("nan")
    final_gamma: float = float("nan")

    def __len__(self):
        return len(self.losses)

    def write_csv(self, path, seed: int | None = None) -> Path:
        """One row per epoch: the loss and gamma before that epoch's update."""
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "loss", "gamma"] + (["seed"] if seed is not None else []))
            for epoch, (loss, gamma) in enumerate(zip(self.losses, self.gammas), start=1):
                w.writerow([epoch, repr(loss), repr(gamma)] + ([seed] if seed is not None else []))
        return path


def init_params(config: TrainConfig, rng: np.random.Generator | None = None) -> ModelParameters:
    rng = rng if rng is not None else seeding.stream(config.seed, seeding.INIT)
    return _init_params(config.variant, config.q, config.h, rng)


def adam_step(arrays: dict, grads: dict, state: AdamState, step_index: int, config: TrainConfig):
    """One bias-corrected Adam update. Returns ``(new_arrays, new_state)``.

    ``step_index`` counts from 1. Inputs are not modified.
    """
    if step_index < 1:
        raise ConfigurationError("step_index counts from 1")
    b1, b2 = config.adam_beta1, config.adam_beta2
    lr, eps = config.learning_rate, config.adam_eps
    bc1 = 1.0 - b1 ** step_index
    bc2 = 1.0 - b2 ** step_index
    new_arrays, new_m, new_v = {}, {}, {}
    for name, theta in arrays.items():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient for parameter {name!r}")
        m = b1 * state.m.get(name, 0.0) + (1.0 - b1) * g
        v = b2 * state.v.get(name, 0.0) + (1.0 - b2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        new_arrays[name] = theta - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name] = np.asarray(m, dtype=np.float64)
        new_v[name] = np.asarray(v, dtype=np.float64)
    return new_arrays, AdamState(new_m, new_v, step_index)


def train(
    dataset,
    config: TrainConfig,
    rng: np.random.Generator | None = None,
    init_hook: Optional[Callable[[ModelParameters], ModelParameters]] = None,
    backend: str | None = None,
):
    """Fit on every dyad in ``dataset``; returns ``(params, history)``.

    The feature scaler is fitted here, on ``dataset`` alone. ``init_hook``
    may edit the freshly initialised parameters before the first step.
    """
    dataset = list(dataset)
    if not dataset:
        raise ConfigurationError("cannot train on an empty dataset")
    require_variant_features(dataset, config.variant)
    params = init_params(config, rng)
    params.scaler = FeatureScaler.fit(dataset, config.variant.numeric_features)
    if init_hook is not None:
        params = init_hook(params)
    batch = kernels.make_batch(dataset, params)
    state = AdamState()
    history = TrainHistory()
    arrays = params.arrays
    for epoch in range(1, config.epochs + 1):
        current = params.replace_arrays(arrays)
        loss, grads = kernels.loss_and_grad(batch, current, config.l2_coef, backend=backend)
        if not math.isfinite(loss):
            raise TrainingError(f"training loss became non-finite at epoch {epoch}", epoch=epoch)
        history.losses.append(loss)
        history.gammas.append(current.gamma)
        try:
            arrays, state = adam_step(arrays, grads, state, epoch, config)
        except NumericalError as exc:
            raise TrainingError(f"epoch {epoch}: {exc}", epoch=epoch) from exc
    params = params.replace_arrays(arrays)
    if not params.all_finite():
        raise TrainingError(f"parameters became non-finite by epoch {config.epochs}", epoch=config.epochs)
    history.final_loss = kernels.batch_loss(batch, params, config.l2_coef, backend=backend)
    history.final_gamma = params.gamma
    return params, history
