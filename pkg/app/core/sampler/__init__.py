"""Two-step rotation-agnostic image sampler."""
from .objectives import (
    cross_entropy_terms, loss_crs, loss_crs_filtered, loss_es, separation_weight, step2_objective,
)
from .scoring import (
    ground_truth_quality, histogram_edges, partition, score, score_corpus, score_gap, score_histogram,
    score_tensor,
)
from .trainer import (
    OverfitCurve, find_overfit_epoch, overfit_probe, rotation_accuracy, run_overfit_probe, smooth,
    train_step1, train_step2, tune_check,
)

__all__ = [
    "cross_entropy_terms", "loss_crs", "loss_crs_filtered", "loss_es", "separation_weight",
    "step2_objective", "ground_truth_quality", "histogram_edges", "partition", "score",
    "score_corpus", "score_gap", "score_histogram", "score_tensor", "OverfitCurve", "find_overfit_epoch",
    "overfit_probe", "rotation_accuracy", "run_overfit_probe", "smooth", "train_step1",
    "train_step2", "tune_check",
]
