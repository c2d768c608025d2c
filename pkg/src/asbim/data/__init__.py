from .descriptives import REFERENCE_MOMENTS, Descriptives, compare_to_reference, descriptives, pairwise_r
from .impute import OutcomeModel, fit_outcome_model, impute_outcomes
from .io import load_dataset, write_dataset
from .preprocess import (
    DEFAULT_MAX_LEN,
    binarize_defeat,
    impute_intervals,
    pad_or_truncate,
    person_mean,
    preprocess,
    preprocess_dyad,
)
from .records import BASE_NUMERIC, IC_NUMERIC, ProcessedDyad, RawDyadObservation
from .synthetic import SyntheticConfig, generate_synthetic, strong_signal_config

__all__ = [
    "BASE_NUMERIC",
    "DEFAULT_MAX_LEN",
    "Descriptives",
    "REFERENCE_MOMENTS",
    "compare_to_reference",
    "IC_NUMERIC",
    "OutcomeModel",
    "ProcessedDyad",
    "RawDyadObservation",
    "SyntheticConfig",
    "binarize_defeat",
    "descriptives",
    "fit_outcome_model",
    "generate_synthetic",
    "impute_intervals",
    "impute_outcomes",
    "load_dataset",
    "pad_or_truncate",
    "pairwise_r",
    "person_mean",
    "preprocess",
    "preprocess_dyad",
    "strong_signal_config",
    "write_dataset",
]
