"""Cross-validation, metrics, baselines and attention export."""

from .baselines import (
    DyadLags,
    TwoStageResult,
    baseline_t1_carry,
    baseline_two_stage_lagged,
    stage1_lags,
)
from .crossval import (
    ALL_MODELS,
    AttentionRecord,
    EvaluationReport,
    FoldMetric,
    cross_validate,
    export_attention,
    fit_fold,
)
from .metrics import FoldAssignment, kfold_split, mse, pearson_r
from .report import report_json, write_report

__all__ = [
    "ALL_MODELS",
    "AttentionRecord",
    "DyadLags",
    "EvaluationReport",
    "FoldAssignment",
    "FoldMetric",
    "TwoStageResult",
    "baseline_t1_carry",
    "baseline_two_stage_lagged",
    "cross_validate",
    "export_attention",
    "fit_fold",
    "kfold_split",
    "mse",
    "pearson_r",
    "report_json",
    "stage1_lags",
    "write_report",
]
