"""Synthetic dyads from a lagged mother/child process with a known outcome law.

Each dyad j gets a mother person mean mu_j and its own child-to-mother lag
a_j ~ N(lag_child_to_mother, lag_cm_spread). With x the centred mother series
and y the binary child series::

    x_t = ar_mother * x_{t-1} + a_j * y_{t-1} + e_t,      e_t ~ N(0, mother_noise_sd)
    P(y_t = 1) = sigmoid(logit(defeat_base_rate) + lag_mother_to_child * x_{t-1}
                         + ar_child * (2 y_{t-1} - 1))
    maut_t = clip(mu_j + x_t, 0, 3)
    T2 = outcome_intercept + outcome_coef_T1 * T1 + outcome_coef_lag_cm * a_j + N(0, outcome_noise_sd)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from ..errors import ConfigurationError
from .records import RawDyadObservation


@dataclass(frozen=True)
class SyntheticConfig:
    n_dyads: int = 50
    seq_len: int = 20
    mother_mean_dist: tuple = (0.58, 0.29)
    defeat_base_rate: float = 0.22
    lag_mother_to_child: float = 0.5
    lag_child_to_mother: float = 0.1
    lag_cm_spread: float = 0.3
    ar_mother: float = 0.1
    ar_child: float = 0.2
    mother_noise_sd: float = 0.25
    t1_dist: tuple = (0.69, 0.28)
    ic_dist: tuple = (4.78, 0.60)
    ic_t1_corr: float = -0.49
    outcome_intercept: float = 0.3
    outcome_coef_lag_cm: float = -0.44
    outcome_coef_T1: float = 0.54
    outcome_noise_sd: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mother_mean_dist", tuple(float(v) for v in self.mother_mean_dist))
        object.__setattr__(self, "t1_dist", tuple(float(v) for v in self.t1_dist))
        object.__setattr__(self, "ic_dist", tuple(float(v) for v in self.ic_dist))
        self.validate()

    def validate(self):
        if self.n_dyads < 0:
            raise ConfigurationError("n_dyads must be >= 0")
        if self.seq_len < 1:
            raise ConfigurationError("seq_len must be >= 1")
        if not 0.0 < self.defeat_base_rate < 1.0:
            raise ConfigurationError("defeat_base_rate must lie in (0, 1)")
        for name in ("ar_mother", "ar_child"):
            if not abs(getattr(self, name)) < 1.0:
                raise ConfigurationError(f"|{name}| must be < 1")
        if not -1.0 <= self.ic_t1_corr <= 1.0:
            raise ConfigurationError("ic_t1_corr must lie in [-1, 1]")
        for pair in ("mother_mean_dist", "t1_dist", "ic_dist"):
            if len(getattr(self, pair)) != 2 or getattr(self, pair)[1] < 0:
                raise ConfigurationError(f"{pair} must be (mean, sd) with sd >= 0")
        for name in ("lag_cm_spread", "mother_noise_sd", "outcome_noise_sd"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def generate_synthetic(config: SyntheticConfig, rng: np.random.Generator | None = None,
                       return_latent: bool = False):
    """Draw ``config.n_dyads`` dyads. Seeded from ``config.rng_seed`` unless
    ``rng`` is given. With ``return_latent`` the per-dyad child-to-mother
    lags are returned as a second value."""
    rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
    n = config.seq_len
    base = _logit(config.defeat_base_rate)
    mu0, mu_sd = config.mother_mean_dist
    t1_mu, t1_sd = config.t1_dist
    ic_mu, ic_sd = config.ic_dist
    rho = config.ic_t1_corr
    records, lags = [], []
    for j in range(config.n_dyads):
        mu = float(np.clip(mu0 + mu_sd * rng.standard_normal(), 0.0, 3.0))
        a_j = config.lag_child_to_mother + config.lag_cm_spread * rng.standard_normal()
        gender = int(rng.integers(2))
        z_t1 = rng.standard_normal()
        t1 = float(np.clip(t1_mu + t1_sd * z_t1, 0.0, 2.0))
        z_ic = rho * z_t1 + math.sqrt(1.0 - rho * rho) * rng.standard_normal()
        ic = float(np.clip(ic_mu + ic_sd * z_ic, 1.0, 7.0))

        e = config.mother_noise_sd * rng.standard_normal(n)
        u = rng.random(n)
        x = np.zeros(n)
        y = np.zeros(n)
        x[0] = e[0]
        y[0] = float(u[0] < config.defeat_base_rate)
        for t in range(1, n):
            x[t] = config.ar_mother * x[t - 1] + a_j * y[t - 1] + e[t]
            z = base + config.lag_mother_to_child * x[t - 1] + config.ar_child * (2.0 * y[t - 1] - 1.0)
            y[t] = float(u[t] < 1.0 / (1.0 + math.exp(-z)))
        maut = np.clip(mu + x, 0.0, 3.0)

        t2 = (config.outcome_intercept + config.outcome_coef_T1 * t1
              + config.outcome_coef_lag_cm * a_j
              + config.outcome_noise_sd * rng.standard_normal())
        records.append(
            RawDyadObservation(
                dyad_id=f"S{j:04d}",
                gender=gender,
                maut=tuple(float(v) for v in maut),
                cdef=tuple(float(v) for v in y),
                ext_t1=t1,
                ext_t2=float(np.clip(t2, 0.0, 2.0)),
                inhibitory_control=ic,
            )
        )
        lags.append(a_j)
    if return_latent:
        return records, np.array(lags)
    return records


def strong_signal_config(n_dyads: int = 400, rng_seed: int = 0) -> SyntheticConfig:
    """A setting where the outcome is driven mostly by the child-to-mother lag.

    Mother noise is small so each jump after a child defeat shows up clearly
    in the deviation profile, and T2 moves one-for-one with T1 so the
    residual head only has to learn the lag effect.
    """
    return SyntheticConfig(
        n_dyads=n_dyads,
        outcome_coef_lag_cm=-1.0,
        outcome_coef_T1=1.0,
        outcome_intercept=0.1,
        outcome_noise_sd=0.02,
        mother_noise_sd=0.05,
        defeat_base_rate=0.3,
        lag_child_to_mother=0.0,
        rng_seed=rng_seed,
    )
