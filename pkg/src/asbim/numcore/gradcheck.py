from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..errors import ConfigurationError, NumericalError

#: floor on the denominator of the relative error
REL_FLOOR = 1e-8


@dataclass
class GradCheckResult:
    max_relative_error: float
    by_group: dict[str, float] = field(default_factory=dict)
    worst: tuple[str, tuple] | None = None
    n_checked: int = 0

    def passed(self, tol: float) -> bool:
        return self.max_relative_error < tol


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(REL_FLOOR, abs(numeric))


def finite_difference_check(
    fn: Callable[[Mapping[str, np.ndarray]], float],
    params: Mapping[str, np.ndarray],
    analytic: Mapping[str, np.ndarray],
    step: float = 1e-5,
) -> GradCheckResult:
    """Compare ``analytic`` against central differences of ``fn`` entry by entry.

    ``params`` is copied; ``fn`` is called with perturbed copies. The
    returned error is max |a - c| / max(1e-8, |c|) over every scalar entry.
    """
    if not step > 0:
        raise ConfigurationError("step must be positive")
    work = {k: np.array(v, dtype=np.float64, copy=True) for k, v in params.items()}
    base = fn(work)
    if not math.isfinite(base):
        raise NumericalError("loss is not finite at the base point")
    result = GradCheckResult(0.0)
    for name, arr in work.items():
        g = np.asarray(analytic[name], dtype=np.float64)
        if g.shape != arr.shape:
            raise ConfigurationError(f"gradient for {name} has shape {g.shape}, expected {arr.shape}")
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        worst = 0.0
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            up = fn(work)
            flat[j] = orig - step
            down = fn(work)
            flat[j] = orig
            if not (math.isfinite(up) and math.isfinite(down)):
                raise NumericalError(f"loss is not finite when perturbing {name}[{j}]")
            err = float(relative_error(gflat[j], (up - down) / (2.0 * step)))
            worst = max(worst, err)
            if err >= result.max_relative_error:
                result.max_relative_error = err
                result.worst = (name, np.unravel_index(j, arr.shape) if arr.ndim else ())
            result.n_checked += 1
        worst = float(worst)
        result.by_group[name] = worst
    return result
