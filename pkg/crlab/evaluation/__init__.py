"""
Identifiability metrics and grid reports.
"""

from .metrics import (
    R2_MIN_SAMPLES,
    RIDGE_ALPHA,
    EvalReport,
    EvaluationError,
    constant_columns,
    correlation_matrix,
    evaluate,
    mcc,
    r2_per_dimension,
    r2_score,
)
from .report import REPORT_COLUMNS, ResultTable, aggregate_results, emit_report

__all__ = [
    "EvalReport",
    "EvaluationError",
    "correlation_matrix",
    "constant_columns",
    "mcc",
    "r2_score",
    "r2_per_dimension",
    "evaluate",
    "RIDGE_ALPHA",
    "R2_MIN_SAMPLES",
    "ResultTable",
    "REPORT_COLUMNS",
    "aggregate_results",
    "emit_report",
]
