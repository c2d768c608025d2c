from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import ConfigurationError, IngestionError

GENDER_CODES = {"boy": 0, "girl": 1, "0": 0, "1": 1}

# numerical features fed to the embedding layer, in order
BASE_NUMERIC = ("mother_mean", "child_mean", "ext_t1")
IC_NUMERIC = BASE_NUMERIC + ("inhibitory_control",)


def _in_range(x: Optional[float], lo: float, hi: float) -> bool:
    return x is None or (math.isfinite(x) and lo <= x <= hi)


@dataclass(frozen=True)
class RawDyadObservation:
    dyad_id: str
    gender: int
    maut: tuple  # Optional[float] per 15-second interval
    cdef: tuple
    ext_t1: float
    ext_t2: Optional[float] = None
    inhibitory_control: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "maut", tuple(self.maut))
        object.__setattr__(self, "cdef", tuple(self.cdef))
        where = f"dyad {self.dyad_id!r}"
        if self.gender not in (0, 1):
            raise IngestionError(f"{where}: gender must be 0 (boy) or 1 (girl), got {self.gender!r}")
        if len(self.maut) == 0 or len(self.maut) != len(self.cdef):
            raise IngestionError(
                f"{where}: sequences must be non-empty and of equal length "
                f"(maut={len(self.maut)}, cdef={len(self.cdef)})"
            )
        for t, (m, c) in enumerate(zip(self.maut, self.cdef), start=1):
            if not _in_range(m, 0.0, 3.0) or not _in_range(c, 0.0, 3.0):
                raise IngestionError(f"{where}, t={t}: rating outside [0, 3]")
        if self.ext_t1 is None or not _in_range(self.ext_t1, 0.0, 2.0):
            raise IngestionError(f"{where}: ext_t1 missing or outside [0, 2]")
        if not _in_range(self.ext_t2, 0.0, 2.0):
            raise IngestionError(f"{where}: ext_t2 outside [0, 2]")
        if not _in_range(self.inhibitory_control, 1.0, 7.0):
            raise IngestionError(f"{where}: inhibitory_control outside [1, 7]")

    @property
    def n_intervals(self) -> int:
        return len(self.maut)


@dataclass(frozen=True, eq=False)
class ProcessedDyad:
    """Model-ready dyad. Sequences are padded to a fixed length; ``mask``
    marks the leading observed positions."""

    dyad_id: str
    mother_seq: np.ndarray
    child_seq: np.ndarray
    mask: np.ndarray
    n_observed: int
    mother_mean: float
    child_mean: float
    gender: int
    ext_t1: float
    ext_t2: Optional[float] = None
    inhibitory_control: Optional[float] = None

    def __post_init__(self):
        L = self.mask.shape[0]
        if self.mother_seq.shape != (L,) or self.child_seq.shape != (L,):
            raise ConfigurationError(f"{self.dyad_id}: sequence/mask length mismatch")
        if not 1 <= self.n_observed <= L:
            raise ConfigurationError(f"{self.dyad_id}: n_observed={self.n_observed} not in [1, {L}]")
        expect = np.arange(L) < self.n_observed
        if not np.array_equal(self.mask, expect):
            raise ConfigurationError(f"{self.dyad_id}: mask must have exactly n_observed leading trues")
        if not np.all((self.child_seq == 0.0) | (self.child_seq == 1.0)):
            raise ConfigurationError(f"{self.dyad_id}: child sequence must be binary")
        if np.any(self.mother_seq[~self.mask] != 0.0) or np.any(self.child_seq[~self.mask] != 0.0):
            raise ConfigurationError(f"{self.dyad_id}: padded positions must hold 0")
        if not (np.all(np.isfinite(self.mother_seq)) and math.isfinite(self.mother_mean)
                and math.isfinite(self.child_mean)):
            raise ConfigurationError(f"{self.dyad_id}: non-finite values")
        for arr in (self.mother_seq, self.child_seq, self.mask):
            arr.setflags(write=False)

    @property
    def max_len(self) -> int:
        return self.mask.shape[0]

    @property
    def mother_dev(self) -> np.ndarray:
        """Centered mother ratings; zero on padding."""
        return np.where(self.mask, self.mother_seq - self.mother_mean, 0.0)

    @property
    def child_dev(self) -> np.ndarray:
        return np.where(self.mask, self.child_seq - self.child_mean, 0.0)

    def numeric_features(self, names=BASE_NUMERIC) -> list[float]:
        out = []
        for n in names:
            v = getattr(self, n)
            if v is None:
                raise ConfigurationError(f"{self.dyad_id}: feature {n!r} is missing")
            out.append(float(v))
        return out

    def with_t2(self, value: float) -> "ProcessedDyad":
        return replace(self, ext_t2=float(value))

    def __eq__(self, other):
        if not isinstance(other, ProcessedDyad):
            return NotImplemented
        return (
            self.dyad_id == other.dyad_id
            and np.array_equal(self.mother_seq, other.mother_seq)
            and np.array_equal(self.child_seq, other.child_seq)
            and np.array_equal(self.mask, other.mask)
            and (self.n_observed, self.mother_mean, self.child_mean, self.gender,
                 self.ext_t1, self.ext_t2, self.inhibitory_control)
            == (other.n_observed, other.mother_mean, other.child_mean, other.gender,
                other.ext_t1, other.ext_t2, other.inhibitory_control)
        )
