"""Linear evaluation of frozen encoder features."""
import logging
from typing import Dict, Optional, Sequence, Union

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from pydantic import BaseModel
from sklearn.metrics import accuracy_score
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import StandardScaler
from torch.utils.data import DataLoader, TensorDataset

from ..config.experiment_config import LinearProbeConfig
from ..errors import ShapeError
from ..etl.corpus import corpus_labels, corpus_to_tensor
from ..rotation.types import ImageSample
from ..utils.seeding import make_generator

logger = logging.getLogger(__name__)

Corpus = Union[Sequence[ImageSample], torch.Tensor]


class ProbeResult(BaseModel):
    """Held-out accuracy of the linear probe.

    ``accuracy_by_lr`` lists every learning rate tried; ``top1`` is the best.
    """
    top1: float
    lr: float
    train_accuracy: float
    accuracy_by_lr: Dict[float, float]
    n_train: int
    n_test: int
    n_classes: int


@torch.inference_mode()
def extract_features(encoder: nn.Module, corpus: Corpus, batch_size: int = 256) -> np.ndarray:
    """Pooled features of every image, one row per image.

    The encoder runs in eval mode without autograd; its previous mode is
    restored afterwards.
    """
    images = corpus.float() if isinstance(corpus, torch.Tensor) else corpus_to_tensor(corpus)
    device = next(encoder.parameters()).device
    was_training = encoder.training
    encoder.eval()
    try:
        rows = [
            encoder(images[start:start + batch_size].to(device)).flatten(1).cpu()
            for start in range(0, images.shape[0], batch_size)
        ]
    finally:
        encoder.train(was_training)
    return torch.cat(rows).double().numpy()


def split_features(features: np.ndarray, labels: np.ndarray, test_fraction: float, seed: int):
    """Stratified train/test split, falling back to a plain split when a class is too small."""
    try:
        return train_test_split(
            features, labels, test_size=test_fraction, random_state=seed, stratify=labels
        )
    except ValueError as e:
        logger.warning(f"Stratified split not possible ({str(e)}); using a random split")
        return train_test_split(features, labels, test_size=test_fraction, random_state=seed)


def fit_linear_classifier(train_x: np.ndarray, train_y: np.ndarray, test_x: np.ndarray,
                          test_y: np.ndarray, cfg: LinearProbeConfig,
                          lr: Optional[float] = None) -> Dict[str, float]:
    """Train one fully-connected layer with softmax cross-entropy.

    Labels must already be class indices ``0..K-1``. The learning rate drops
    by a factor of 10 at each milestone fraction of ``cfg.epochs``.

    Returns:
        Dictionary with train and test accuracy
    """
    lr = cfg.lr if lr is None else lr
    n_classes = int(max(train_y.max(), test_y.max())) + 1
    with torch.random.fork_rng():
        torch.manual_seed(cfg.seed)
        head = nn.Linear(train_x.shape[1], n_classes).double()

    loader = DataLoader(
        TensorDataset(torch.from_numpy(train_x), torch.from_numpy(train_y).long()),
        batch_size=cfg.batch_size,
        shuffle=cfg.shuffle,
        generator=make_generator(cfg.seed),
    )
    optimizer = torch.optim.SGD(head.parameters(), lr=lr, momentum=cfg.momentum,
                                weight_decay=cfg.weight_decay)
    milestones = sorted({max(1, round(f * cfg.epochs)) for f in cfg.milestones})
    scheduler = torch.optim.lr_scheduler.MultiStepLR(optimizer, milestones=milestones, gamma=0.1)

    for epoch in range(1, cfg.epochs + 1):
        head.train()
        for x, y in loader:
            loss = F.cross_entropy(head(x), y)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        scheduler.step()
        if epoch == cfg.epochs or epoch % 10 == 0:
            logger.debug(f"probe lr={lr:g} epoch {epoch}/{cfg.epochs}: loss={loss.item():.4f}")

    head.eval()
    with torch.no_grad():
        train_pred = head(torch.from_numpy(train_x)).argmax(dim=1).numpy()
        test_pred = head(torch.from_numpy(test_x)).argmax(dim=1).numpy()
    return {
        "train_accuracy": float(accuracy_score(train_y, train_pred)),
        "test_accuracy": float(accuracy_score(test_y, test_pred)),
    }


def run_linear_probe(features: np.ndarray, labels: Sequence, cfg: LinearProbeConfig) -> ProbeResult:
    """Split, standardize and fit the probe; report held-out top-1.

    Args:
        features: N x D frozen features
        labels: N class labels of any hashable type
        cfg: Probe protocol

    Returns:
        ProbeResult for the best learning rate of ``cfg.lr_grid`` (or ``cfg.lr``)
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2:
        raise ShapeError(f"features must be N x D, got shape {features.shape}")
    if features.shape[0] != labels.shape[0]:
        raise ShapeError(f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
    if not np.isfinite(features).all():
        raise ValueError("features contain non-finite values")
    classes, targets = np.unique(labels, return_inverse=True)
    if len(classes) < 2:
        raise ValueError(f"linear probe needs at least 2 classes, got {len(classes)}")

    train_x, test_x, train_y, test_y = split_features(features, targets, cfg.test_fraction, cfg.seed)
    if cfg.standardize:
        scaler = StandardScaler().fit(train_x)
        train_x, test_x = scaler.transform(train_x), scaler.transform(test_x)

    grid = cfg.lr_grid or [cfg.lr]
    accuracy_by_lr: Dict[float, float] = {}
    train_by_lr: Dict[float, float] = {}
    for lr in grid:
        scores = fit_linear_classifier(train_x, train_y, test_x, test_y, cfg, lr)
        accuracy_by_lr[lr] = scores["test_accuracy"]
        train_by_lr[lr] = scores["train_accuracy"]
        logger.info(f"Linear probe lr={lr:g}: top-1 {scores['test_accuracy']:.4f}")

    best_lr = max(grid, key=lambda lr: (accuracy_by_lr[lr], -grid.index(lr)))
    return ProbeResult(
        top1=accuracy_by_lr[best_lr],
        lr=best_lr,
        train_accuracy=train_by_lr[best_lr],
        accuracy_by_lr=accuracy_by_lr,
        n_train=len(train_y),
        n_test=len(test_y),
        n_classes=len(classes),
    )


def linear_probe(features: np.ndarray, labels: Sequence, cfg: LinearProbeConfig) -> float:
    """Top-1 accuracy of a linear classifier on held-out frozen features."""
    return run_linear_probe(features, labels, cfg).top1


def evaluate_encoder(encoder: nn.Module, corpus: Sequence[ImageSample],
                     cfg: LinearProbeConfig) -> ProbeResult:
    """Extract features of a labelled corpus and run the probe on them."""
    labels = corpus_labels(corpus)
    features = extract_features(encoder, corpus, batch_size=max(cfg.batch_size, 256))
    logger.info(f"Extracted {features.shape[1]}-dim features of {features.shape[0]} images")
    return run_linear_probe(features, labels, cfg)
