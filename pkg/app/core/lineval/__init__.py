"""Frozen-feature linear evaluation."""
from .probe import (
    ProbeResult, evaluate_encoder, extract_features, fit_linear_classifier, linear_probe,
    run_linear_probe, split_features,
)

__all__ = [
    "ProbeResult", "evaluate_encoder", "extract_features", "fit_linear_classifier", "linear_probe",
    "run_linear_probe", "split_features",
]
