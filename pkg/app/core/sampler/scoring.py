"""Inference-time scoring and the RAI / non-RAI partition."""
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import torch
from sklearn.metrics import precision_score, recall_score

from ..etl.corpus import corpus_to_tensor
from ..rotation.entropy import MAX_ENTROPY, batch_entropy
from ..rotation.ops import expand_tensor_with_rotations
from ..rotation.types import ImageSample, Verdict
from ..storage.artifact_repository import save_partition
from ..storage.models import RaiPartition, ScoreRecord

logger = logging.getLogger(__name__)


@torch.no_grad()
def score_tensor(model: torch.nn.Module, images: torch.Tensor) -> torch.Tensor:
    """Mean rotation-prediction entropy over the four-rotation orbit of each image."""
    was_training = model.training
    model.eval()
    try:
        device = next(model.parameters()).device
        x, _ = expand_tensor_with_rotations(images.to(device))
        probs = torch.softmax(model(x), dim=-1)
        # sample-major: row 4*i + k is image i at rotation k
        return batch_entropy(probs).reshape(-1, 4).mean(dim=1).cpu()
    finally:
        model.train(was_training)


def score(model: torch.nn.Module, img: ImageSample) -> float:
    """Average entropy of the model's outputs on the four rotations of ``img``."""
    return float(score_tensor(model, corpus_to_tensor([img]))[0])


def score_corpus(model: torch.nn.Module, corpus: Sequence[ImageSample],
                 batch_size: int = 256) -> List[Tuple[str, float]]:
    """Score every image; results come back ordered by id."""
    images = corpus_to_tensor(corpus)
    scores = torch.cat([
        score_tensor(model, images[start:start + batch_size])
        for start in range(0, images.shape[0], batch_size)
    ])
    return sorted(((img.id, float(s)) for img, s in zip(corpus, scores.tolist())), key=lambda t: t[0])


def partition(scores: Union[Mapping[str, float], Iterable[Tuple[str, float]]], rho: float, m: float,
              path: Optional[Union[str, Path]] = None, **metadata) -> RaiPartition:
    """Label images whose score exceeds ``rho + m`` as rotation-agnostic.

    Args:
        scores: ``id -> score`` mapping or ``(id, score)`` pairs
        rho: Entropy center
        m: Margin
        path: When given, the partition is written there
        **metadata: Extra RaiPartition fields (config snapshot, accuracies)

    Returns:
        RaiPartition with one record per image
    """
    items = scores.items() if isinstance(scores, Mapping) else scores
    threshold = rho + m
    records = []
    for image_id, s in items:
        if not math.isfinite(s):
            raise ValueError(f"score of {image_id} is not finite: {s}")
        # strictly larger than the threshold
        verdict = Verdict.RAI if s > threshold else Verdict.NON_RAI
        records.append(ScoreRecord(id=image_id, score=float(s), verdict=verdict))
    result = RaiPartition(records=records, rho=rho, margin=m, **metadata)
    logger.info(f"Partitioned {len(result)} images at threshold {threshold:.6f}: {result.rai_count()} RAI")
    if path is not None:
        save_partition(result, path)
    return result


def ground_truth_quality(result: RaiPartition, corpus: Sequence[ImageSample]) -> Optional[Dict[str, float]]:
    """Precision and recall of the RAI verdict against synthetic ground truth.

    Returns None when the corpus carries no ground truth.
    """
    truth = {img.id: img.truth for img in corpus if img.truth is not None}
    if not truth:
        return None
    verdicts = result.verdicts()
    ids = [i for i in truth if i in verdicts]
    y_true = np.asarray([truth[i] is Verdict.RAI for i in ids])
    y_pred = np.asarray([verdicts[i] for i in ids])
    return {
        "precision": float(precision_score(y_true, y_pred, zero_division=0)),
        "recall": float(recall_score(y_true, y_pred, zero_division=0)),
    }


def histogram_edges(bin_width: float = 0.05) -> np.ndarray:
    """Bin edges of fixed width covering [0, ln 4]."""
    n_bins = int(math.ceil(MAX_ENTROPY / bin_width))
    return np.arange(n_bins + 1) * bin_width


def score_histogram(scores: Dict[str, Sequence[float]], bin_width: float = 0.05) -> pd.DataFrame:
    """Counts of scores per fixed-width bin, one count column per named series.

    Args:
        scores: e.g. ``{"step1": [...], "step2": [...]}``
        bin_width: Width of each bin

    Returns:
        DataFrame with ``bin_start``, ``bin_end`` and one column per series
    """
    edges = histogram_edges(bin_width)
    frame = pd.DataFrame({"bin_start": edges[:-1], "bin_end": edges[1:]})
    for name, values in scores.items():
        # upper edge may sit above ln 4; clip float overshoot into the last bin
        values = np.clip(np.asarray(values, dtype=float), 0.0, edges[-1])
        counts, _ = np.histogram(values, bins=edges)
        frame[name] = counts
    return frame


def score_gap(scores: Iterable[Tuple[str, float]], corpus: Sequence[ImageSample]) -> Optional[float]:
    """Mean score of ground-truth RAI images minus that of non-RAI images.

    Returns None unless the corpus has ground truth for both groups.
    """
    truth = {img.id: img.truth for img in corpus if img.truth is not None}
    rai = [s for i, s in scores if truth.get(i) is Verdict.RAI]
    non_rai = [s for i, s in scores if truth.get(i) is Verdict.NON_RAI]
    if not rai or not non_rai:
        return None
    return float(np.mean(rai) - np.mean(non_rai))
