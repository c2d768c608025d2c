"""Turning raw ratings into padded, centered, model-ready dyads."""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Iterable, Optional, Sequence

import numpy as np

from ..errors import ConfigurationError, DegenerateInputError, IngestionError
from .records import ProcessedDyad, RawDyadObservation

DEFAULT_MAX_LEN = 20


def binarize_defeat(rating: Optional[float]) -> Optional[int]:
    """0 stays 0, anything above 0 becomes 1, missing stays missing."""
    if rating is None:
        return None
    if rating < 0 or not math.isfinite(rating):
        raise IngestionError(f"defeat rating {rating!r} is negative or non-finite")
    return 1 if rating > 0 else 0


def person_mean(seq: Iterable[Optional[float]]) -> float:
    observed = [float(v) for v in seq if v is not None]
    if not observed:
        raise DegenerateInputError("person mean of a fully missing sequence")
    if min(observed) == max(observed):
        # fsum(n*c)/n can miss c by one ulp; constant series must centre to exactly 0
        return observed[0]
    return math.fsum(observed) / len(observed)


def pad_or_truncate(seq: Sequence[float], max_len: int = DEFAULT_MAX_LEN):
    """Return ``(values, mask)`` of length ``max_len``: data first, zeros after."""
    if max_len < 1:
        raise ConfigurationError("max_len must be >= 1")
    n = min(len(seq), max_len)
    values = np.zeros(max_len)
    values[:n] = np.asarray(seq[:n], dtype=np.float64)
    mask = np.zeros(max_len, dtype=bool)
    mask[:n] = True
    return values, mask


def impute_intervals(dyad: RawDyadObservation) -> RawDyadObservation:
    """Fill missing intervals: mother with her person mean, child (binarized) with 0."""
    m_fill = person_mean(dyad.maut)
    child = [binarize_defeat(c) for c in dyad.cdef]
    if all(c is None for c in child):
        raise DegenerateInputError(f"dyad {dyad.dyad_id!r}: child sequence fully missing")
    return replace(
        dyad,
        maut=tuple(m_fill if m is None else float(m) for m in dyad.maut),
        cdef=tuple(0.0 if c is None else float(c) for c in child),
    )


def truncate(dyad: RawDyadObservation, max_len: int) -> RawDyadObservation:
    if dyad.n_intervals <= max_len:
        return dyad
    return replace(dyad, maut=dyad.maut[:max_len], cdef=dyad.cdef[:max_len])


def preprocess_dyad(dyad: RawDyadObservation, max_len: int = DEFAULT_MAX_LEN) -> ProcessedDyad:
    # means are taken over observed intervals of the window the model sees
    window = truncate(dyad, max_len)
    mother_mean = person_mean(window.maut)
    child_mean = person_mean([binarize_defeat(c) for c in window.cdef])
    filled = impute_intervals(window)
    mother, mask = pad_or_truncate(filled.maut, max_len)
    child, _ = pad_or_truncate(filled.cdef, max_len)
    return ProcessedDyad(
        dyad_id=dyad.dyad_id,
        mother_seq=mother,
        child_seq=child,
        mask=mask,
        n_observed=int(mask.sum()),
        mother_mean=mother_mean,
        child_mean=child_mean,
        gender=dyad.gender,
        ext_t1=float(dyad.ext_t1),
        ext_t2=None if dyad.ext_t2 is None else float(dyad.ext_t2),
        inhibitory_control=(
            None if dyad.inhibitory_control is None else float(dyad.inhibitory_control)
        ),
    )


def preprocess(dataset: Iterable[RawDyadObservation], max_len: int = DEFAULT_MAX_LEN) -> list[ProcessedDyad]:
    return [preprocess_dyad(d, max_len) for d in dataset]
