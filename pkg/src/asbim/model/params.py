from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from ..data.records import BASE_NUMERIC, IC_NUMERIC
from ..errors import ConfigurationError
from ..numcore import gamma_from_logit

N_GENDERS = 2
CHECKPOINT_FORMAT = "asbim-checkpoint"
CHECKPOINT_VERSION = 1


class Variant(str, enum.Enum):
    BASE = "base"
    PLUS_D = "plus_d"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, Variant):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"base": cls.BASE, "asbim": cls.BASE, "plus_d": cls.PLUS_D,
                   "asbim+d": cls.PLUS_D, "+d": cls.PLUS_D, "d": cls.PLUS_D}
        if key not in aliases:
            raise ConfigurationError(f"unknown variant {value!r} (use 'base' or 'plus_d')")
        return aliases[key]

    @property
    def numeric_features(self) -> tuple[str, ...]:
        return IC_NUMERIC if self is Variant.PLUS_D else BASE_NUMERIC

    @property
    def n_features(self) -> int:
        # numerical tables plus the gender lookup table
        return len(self.numeric_features) + 1


def require_variant_features(dyads, variant: Variant):
    if variant is Variant.PLUS_D:
        lacking = [d.dyad_id for d in dyads if d.inhibitory_control is None]
        if lacking:
            raise ConfigurationError(
                f"variant plus_d needs inhibitory_control on every dyad; missing for {lacking[:5]}"
                + (" ..." if len(lacking) > 5 else "")
            )


@dataclass
class FeatureScaler:
    """z-scoring of the numerical embedding inputs, fitted on training dyads."""

    names: tuple[str, ...]
    means: np.ndarray
    sds: np.ndarray

    @classmethod
    def identity(cls, names: Iterable[str]) -> "FeatureScaler":
        names = tuple(names)
        return cls(names, np.zeros(len(names)), np.ones(len(names)))

    @classmethod
    def fit(cls, dyads, names: Iterable[str]) -> "FeatureScaler":
        names = tuple(names)
        X = np.array([d.numeric_features(names) for d in dyads], dtype=np.float64)
        if X.shape[0] == 0:
            raise ConfigurationError("cannot fit feature scaler on an empty dataset")
        sds = X.std(axis=0)
        sds[~(sds > 1e-12)] = 1.0
        return cls(names, X.mean(axis=0), sds)

    def transform(self, dyads) -> np.ndarray:
        X = np.array([d.numeric_features(self.names) for d in dyads], dtype=np.float64)
        return ((X - self.means) / self.sds).reshape(-1, len(self.names))


def param_shapes(variant: Variant, q: int, h: int) -> dict[str, tuple]:
    shapes = {f"phi_{name}": (q,) for name in variant.numeric_features}
    shapes["phi_gender"] = (N_GENDERS, q)
    shapes.update({
        "W1": (q, q), "b1": (q,),
        "W2": (q, q), "b2": (q,),
        "gamma_logit": (),
        "F1_W": (h, q), "F1_b": (h,),
        "F2_W": (h, q), "F2_b": (h,),
        "F3_W": (h, q), "F3_b": (h,),
        "W3": (1, h), "b3": (),
    })
    return shapes


def is_weight(name: str) -> bool:
    """Names that carry the L2 penalty: embeddings and weight matrices."""
    return name.startswith("phi_") or name in ("W1", "W2", "F1_W", "F2_W", "F3_W", "W3")


@dataclass
class ModelParameters:
    arrays: dict[str, np.ndarray]
    variant: Variant
    q: int
    h: int
    scaler: FeatureScaler = None

    def __post_init__(self):
        self.variant = Variant.parse(self.variant)
        expected = param_shapes(self.variant, self.q, self.h)
        if set(expected) != set(self.arrays):
            raise ConfigurationError(
                f"parameter names {sorted(self.arrays)} do not match variant {self.variant.value}"
            )
        for name, shape in expected.items():
            arr = np.asarray(self.arrays[name], dtype=np.float64)
            if arr.shape != shape:
                raise ConfigurationError(f"{name} has shape {arr.shape}, expected {shape}")
            self.arrays[name] = arr
        # fixed ordering keeps checkpoints and optimizer state stable
        self.arrays = {name: self.arrays[name] for name in expected}
        if self.scaler is None:
            self.scaler = FeatureScaler.identity(self.variant.numeric_features)
        if tuple(self.scaler.names) != self.variant.numeric_features:
            raise ConfigurationError("scaler features do not match the variant")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    @property
    def gamma(self) -> float:
        return gamma_from_logit(float(self.arrays["gamma_logit"]))

    @property
    def n_tables(self) -> int:
        return self.variant.n_features

    def names(self) -> list[str]:
        return list(self.arrays)

    def copy(self) -> "ModelParameters":
        return ModelParameters(
            {k: v.copy() for k, v in self.arrays.items()}, self.variant, self.q, self.h,
            FeatureScaler(self.scaler.names, self.scaler.means.copy(), self.scaler.sds.copy()),
        )

    def replace_arrays(self, arrays: dict[str, np.ndarray]) -> "ModelParameters":
        return ModelParameters(dict(arrays), self.variant, self.q, self.h, self.scaler)

    def l2_penalty(self) -> float:
        return math.fsum(float(np.sum(v * v)) for k, v in self.arrays.items() if is_weight(k))

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.arrays.values())

    def bitwise_equal(self, other: "ModelParameters") -> bool:
        return (
            self.variant == other.variant
            and self.arrays.keys() == other.arrays.keys()
            and all(a.tobytes() == other.arrays[k].tobytes() for k, a in self.arrays.items())
            and self.scaler.means.tobytes() == other.scaler.means.tobytes()
            and self.scaler.sds.tobytes() == other.scaler.sds.tobytes()
        )


def init_arrays(variant: Variant, q: int, h: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    if q < 1 or h < 1:
        raise ConfigurationError("q and h must be positive")
    arrays = {}
    for name, shape in param_shapes(variant, q, h).items():
        if is_weight(name):
            # dense weights: fan_in is the column count; embeddings use q
            fan_in = shape[-1] if len(shape) == 2 and not name.startswith("phi_") else q
            bound = 1.0 / math.sqrt(fan_in)
            arrays[name] = rng.uniform(-bound, bound, size=shape)
        else:
            arrays[name] = np.zeros(shape)
    return arrays


def init_params(variant, q: int = 50, h: int = 50, rng: np.random.Generator | None = None) -> ModelParameters:
    variant = Variant.parse(variant)
    rng = rng if rng is not None else np.random.default_rng()
    return ModelParameters(init_arrays(variant, q, h, rng), variant, q, h)


# --- checkpoint -------------------------------------------------------------
# JSON with Python float reprs: human-readable, and repr round-trips every
# float64 exactly, so load(save(p)) is bit-identical.


def checkpoint_dict(params: ModelParameters, extra: dict | None = None) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "variant": params.variant.value,
        "q": params.q,
        "h": params.h,
        "scaler": {
            "names": list(params.scaler.names),
            "means": params.scaler.means.tolist(),
            "sds": params.scaler.sds.tolist(),
        },
        "params": {
            name: {"shape": list(arr.shape), "data": arr.reshape(-1).tolist()}
            for name, arr in params.arrays.items()
        },
        "meta": extra or {},
    }


def save_checkpoint(params: ModelParameters, path, extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(checkpoint_dict(params, extra), indent=1, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


def params_from_checkpoint(doc: dict) -> ModelParameters:
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ConfigurationError("not an ASBIM checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ConfigurationError(f"unsupported checkpoint version {doc.get('version')}")
    arrays = {
        name: np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in doc["params"].items()
    }
    sc = doc["scaler"]
    scaler = FeatureScaler(tuple(sc["names"]), np.array(sc["means"], dtype=np.float64),
                           np.array(sc["sds"], dtype=np.float64))
    return ModelParameters(arrays, Variant.parse(doc["variant"]), int(doc["q"]), int(doc["h"]), scaler)


def load_checkpoint(path) -> ModelParameters:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read checkpoint {path}: {exc}") from exc
    return params_from_checkpoint(doc)
