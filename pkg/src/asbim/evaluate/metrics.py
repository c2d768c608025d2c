from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ConfigurationError


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: dict  # dyad_id -> fold index

    def members(self, fold: int, order: Sequence | None = None) -> list:
        ids = order if order is not None else list(self.fold_of)
        return [i for i in ids if self.fold_of[i] == fold]

    def sizes(self) -> list[int]:
        counts = [0] * self.k
        for f in self.fold_of.values():
            counts[f] += 1
        return counts


def kfold_split(dyad_ids: Sequence, k: int = 5, rng: np.random.Generator | None = None) -> FoldAssignment:
    """Random partition into ``k`` folds whose sizes differ by at most one."""
    ids = list(dyad_ids)
    if k < 2:
        raise ConfigurationError("k must be >= 2")
    if len(set(ids)) != len(ids):
        raise ConfigurationError("dyad ids must be unique")
    if len(ids) < k:
        raise ConfigurationError(f"cannot split {len(ids)} dyads into {k} folds")
    rng = rng if rng is not None else np.random.default_rng()
    order = rng.permutation(len(ids))
    fold_of = {ids[idx]: pos % k for pos, idx in enumerate(order)}
    return FoldAssignment(k, {i: fold_of[i] for i in ids})


def mse(pred, obs) -> float:
    p = np.asarray(pred, dtype=np.float64)
    o = np.asarray(obs, dtype=np.float64)
    if p.shape != o.shape or p.ndim != 1:
        raise ConfigurationError(f"mse: length mismatch {p.shape} vs {o.shape}")
    if p.size == 0:
        raise ConfigurationError("mse of empty lists")
    d = p - o
    return math.fsum(d * d) / d.size


def pearson_r(pred, obs) -> Optional[float]:
    """Pearson correlation, or ``None`` when either side has zero variance."""
    p = np.asarray(pred, dtype=np.float64)
    o = np.asarray(obs, dtype=np.float64)
    if p.shape != o.shape or p.ndim != 1:
        raise ConfigurationError(f"pearson_r: length mismatch {p.shape} vs {o.shape}")
    if p.size < 2:
        return None
    dp, do = p - p.mean(), o - o.mean()
    spp, soo = float(dp @ dp), float(do @ do)
    if spp <= 0.0 or soo <= 0.0:
        return None
    return float(np.clip((dp @ do) / math.sqrt(spp * soo), -1.0, 1.0))
