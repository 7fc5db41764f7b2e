"""
Evaluation Layer - test-set metrics and sweep reports

Provides:
- metrics: RunMetrics, evaluate(), evaluate_predictions(), per-sample errors
- report: CSV rows and markdown summaries of a sweep
"""
from .metrics import RunMetrics, SampleErrors, evaluate, evaluate_predictions, sample_errors, predict_pool

__all__ = [
    "RunMetrics",
    "SampleErrors",
    "evaluate",
    "evaluate_predictions",
    "sample_errors",
    "predict_pool",
]
