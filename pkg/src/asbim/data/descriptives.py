"""Between-person descriptive statistics (means, SDs, ranges, correlations)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .preprocess import binarize_defeat, person_mean
from .records import RawDyadObservation

VARIABLES = ("maut", "cdef", "ext_t1", "ext_t2", "inhibitory_control")
LABELS = {
    "maut": "Maternal autonomy support (person mean)",
    "cdef": "Child defeat (person mean, binarized)",
    "ext_t1": "Externalizing problems T1",
    "ext_t2": "Externalizing problems T2",
    "inhibitory_control": "Inhibitory control T1",
}


@dataclass
class VariableSummary:
    n: int
    mean: Optional[float]
    sd: Optional[float]
    min: Optional[float]
    max: Optional[float]


@dataclass
class Descriptives:
    variables: dict[str, VariableSummary]
    correlations: dict[tuple[str, str], Optional[float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "variables": {k: vars(v) for k, v in self.variables.items()},
            "correlations": {f"{a}~{b}": r for (a, b), r in self.correlations.items()},
        }


def between_person_values(dataset: list[RawDyadObservation]) -> dict[str, list[Optional[float]]]:
    cols: dict[str, list[Optional[float]]] = {v: [] for v in VARIABLES}
    for d in dataset:
        cols["maut"].append(person_mean(d.maut) if any(m is not None for m in d.maut) else None)
        binary = [binarize_defeat(c) for c in d.cdef]
        cols["cdef"].append(person_mean(binary) if any(b is not None for b in binary) else None)
        cols["ext_t1"].append(d.ext_t1)
        cols["ext_t2"].append(d.ext_t2)
        cols["inhibitory_control"].append(d.inhibitory_control)
    return cols


def _summary(values) -> VariableSummary:
    x = np.array([v for v in values if v is not None], dtype=np.float64)
    if x.size == 0:
        return VariableSummary(0, None, None, None, None)
    sd = float(x.std(ddof=1)) if x.size > 1 else None
    return VariableSummary(int(x.size), float(x.mean()), sd, float(x.min()), float(x.max()))


def pairwise_r(a, b) -> Optional[float]:
    """Pearson r over pairs where both values are present; None if undefined."""
    pairs = [(x, y) for x, y in zip(a, b) if x is not None and y is not None]
    if len(pairs) < 2:
        return None
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    dx, dy = x - x.mean(), y - y.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        return None
    return float(np.clip((dx @ dy) / denom, -1.0, 1.0))


def descriptives(dataset: list[RawDyadObservation]) -> Descriptives:
    cols = between_person_values(dataset)
    out = Descriptives({v: _summary(cols[v]) for v in VARIABLES})
    for i, a in enumerate(VARIABLES):
        for b in VARIABLES[:i]:
            out.correlations[(a, b)] = pairwise_r(cols[a], cols[b])
    return out


# Published between-person means and SDs for the study sample, used by
# ``asbim report --check-reference``.
REFERENCE_MOMENTS = {
    "maut": (0.58, 0.29),
    "cdef": (0.21, 0.17),
    "ext_t1": (0.69, 0.28),
    "ext_t2": (0.62, 0.28),
    "inhibitory_control": (4.78, 0.60),
}


def compare_to_reference(desc: Descriptives, tol: float = 0.01, reference=None) -> list[dict]:
    """Per variable and statistic: reference value, observed value and pass flag."""
    reference = reference if reference is not None else REFERENCE_MOMENTS
    rows = []
    for name, (ref_mean, ref_sd) in reference.items():
        summ = desc.variables.get(name)
        for stat, ref in (("mean", ref_mean), ("sd", ref_sd)):
            got = getattr(summ, stat) if summ is not None else None
            ok = got is not None and abs(got - ref) <= tol + 1e-12
            rows.append({"variable": name, "stat": stat, "reference": ref, "observed": got, "ok": ok})
    return rows
