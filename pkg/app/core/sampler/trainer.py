"""Training loops of the rotation-agnostic image sampler.

Step 1 trains the rotation predictor on every image; Step 2 continues on the
same model with the filtered cross-entropy plus the entropy separation term.
"""
import copy
import logging
import math
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import torch
import torch.nn.functional as F
from pydantic import BaseModel
from sklearn.model_selection import train_test_split
from torch.utils.data import DataLoader, TensorDataset

from ..config.sampler_config import SamplerConfig
from ..errors import NumericalError
from ..etl.corpus import corpus_to_tensor
from ..models.rotation_predictor import RotationPredictor
from ..optimization.schedules import build_optimizer, build_scheduler
from ..rotation.ops import expand_tensor_with_rotations
from ..rotation.types import ImageSample
from ..utils.seeding import make_generator
from .objectives import loss_crs, step2_objective

logger = logging.getLogger(__name__)

Corpus = Union[Sequence[ImageSample], torch.Tensor]
BatchObjective = Callable[[torch.Tensor, torch.Tensor, int], torch.Tensor]


def _as_images(corpus: Corpus) -> torch.Tensor:
    if isinstance(corpus, torch.Tensor):
        return corpus.float()
    return corpus_to_tensor(corpus)


def _device(model: torch.nn.Module) -> torch.device:
    return next(model.parameters()).device


@torch.no_grad()
def rotation_accuracy(model: RotationPredictor, corpus: Corpus, batch_size: int = 256) -> float:
    """Fraction of rotation-expanded samples whose rotation is predicted correctly."""
    images = _as_images(corpus)
    was_training = model.training
    model.eval()
    correct = 0
    total = 0
    try:
        for start in range(0, images.shape[0], batch_size):
            x, labels = expand_tensor_with_rotations(images[start:start + batch_size].to(_device(model)))
            correct += int((model(x).argmax(dim=-1) == labels).sum())
            total += labels.numel()
    finally:
        model.train(was_training)
    return correct / total


def _train_epochs(model: RotationPredictor, images: torch.Tensor, cfg: SamplerConfig,
                  epochs: int, objective: BatchObjective, step_name: str,
                  seed: int, on_epoch: Optional[Callable[[int, float], None]] = None) -> List[float]:
    """Shared loop: rotation-expand each batch, apply ``objective``, step the optimizer.

    Returns:
        Mean objective per epoch
    """
    loader = DataLoader(
        TensorDataset(images),
        batch_size=cfg.batch_size,
        shuffle=True,
        generator=make_generator(seed),
    )
    optimizer = build_optimizer(model.parameters(), cfg.optimizer)
    scheduler = build_scheduler(optimizer, cfg.optimizer, epochs, len(loader))
    device = _device(model)
    losses = []

    model.train()
    for epoch in range(1, epochs + 1):
        running = 0.0
        for batch_index, (x,) in enumerate(loader):
            x, labels = expand_tensor_with_rotations(x.to(device))
            probs = F.softmax(model(x), dim=-1)
            loss = objective(probs, labels, epoch)
            if not torch.isfinite(loss):
                diagnostics = {
                    "step": step_name,
                    "epoch": epoch,
                    "batch": batch_index,
                    "lr": scheduler.get_last_lr()[0],
                    "loss": float(loss.detach()),
                    "min_prob": float(probs.detach().min()),
                }
                logger.error(f"Non-finite loss during {step_name}: {diagnostics}")
                raise NumericalError(f"{step_name} diverged at epoch {epoch}", diagnostics)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            scheduler.step()
            running += float(loss.detach())
        mean_loss = running / len(loader)
        losses.append(mean_loss)
        logger.info(f"{step_name} epoch {epoch}/{epochs}: loss={mean_loss:.4f} lr={scheduler.get_last_lr()[0]:.2e}")
        if on_epoch is not None:
            on_epoch(epoch, mean_loss)
    return losses


def train_step1(corpus: Corpus, model: RotationPredictor, cfg: SamplerConfig,
                epochs: Optional[int] = None) -> RotationPredictor:
    """Train the rotation predictor on all images with the rotation cross-entropy.

    Args:
        corpus: Images or an N x C x H x W tensor
        model: Predictor, trained in place
        cfg: Sampler configuration
        epochs: Overrides ``cfg.beta1``; needed when beta1 is left to the probe

    Returns:
        The trained model, with ``rotation_accuracy["step1"]`` set
    """
    epochs = epochs if epochs is not None else cfg.beta1
    if epochs is None or epochs < 1:
        raise ValueError("Step 1 needs beta1 >= 1; run the overfit probe or set sampler.beta1")
    images = _as_images(corpus)
    _train_epochs(model, images, cfg, epochs, lambda p, y, _: loss_crs(p, y), "step1", cfg.seed)
    model.rotation_accuracy["step1"] = rotation_accuracy(model, images, cfg.score_batch_size)
    logger.info(f"Step 1 finished after {epochs} epochs, rotation accuracy {model.rotation_accuracy['step1']:.4f}")
    return model


def train_step2(corpus: Corpus, model: RotationPredictor, cfg: SamplerConfig) -> RotationPredictor:
    """Continue training with the filtered cross-entropy and the ramped separation term."""
    if "step1" not in model.rotation_accuracy:
        logger.warning("train_step2 called on a model without a recorded Step 1")
    images = _as_images(corpus)
    _train_epochs(
        model, images, cfg, cfg.beta2,
        lambda p, y, epoch: step2_objective(p, y, epoch, cfg),
        "step2", cfg.seed + 1,
    )
    model.rotation_accuracy["step2"] = rotation_accuracy(model, images, cfg.score_batch_size)
    logger.info(f"Step 2 finished after {cfg.beta2} epochs, rotation accuracy {model.rotation_accuracy['step2']:.4f}")
    return model


class OverfitCurve(BaseModel):
    """Per-epoch rotation accuracy of the overfit probe."""
    train_accuracy: List[float]
    val_accuracy: List[float]
    smoothed_val_accuracy: List[float]
    overfit_epoch: int
    degraded: bool

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "epoch": np.arange(1, len(self.train_accuracy) + 1),
            "train_accuracy": self.train_accuracy,
            "val_accuracy": self.val_accuracy,
            "smoothed_val_accuracy": self.smoothed_val_accuracy,
        })


def smooth(series: Sequence[float], window: int = 3) -> List[float]:
    """Trailing moving average; the first entries average what is available."""
    return pd.Series(series, dtype=float).rolling(window, min_periods=1).mean().tolist()


def find_overfit_epoch(val_accuracy: Sequence[float], window: int = 3) -> Optional[int]:
    """First 1-based epoch whose successor has lower smoothed validation accuracy.

    Returns None when the smoothed series never decreases.
    """
    smoothed = smooth(val_accuracy, window)
    for e in range(len(smoothed) - 1):
        if smoothed[e + 1] < smoothed[e]:
            return e + 1
    return None


def run_overfit_probe(corpus: Corpus, model_template: RotationPredictor, cfg: SamplerConfig,
                      max_epochs: Optional[int] = None) -> OverfitCurve:
    """Pick the Step 1 epoch count by watching held-out rotation accuracy.

    A copy of ``model_template`` is trained on a seeded split of
    ``probe_train_fraction`` of the corpus; the remainder is evaluated
    after every epoch.
    """
    max_epochs = max_epochs or cfg.probe_max_epochs
    images = _as_images(corpus)
    indices = np.arange(images.shape[0])
    train_idx, val_idx = train_test_split(
        indices, train_size=cfg.probe_train_fraction, random_state=cfg.seed, shuffle=True
    )
    train_images = images[torch.as_tensor(train_idx)]
    val_images = images[torch.as_tensor(val_idx)]
    model = copy.deepcopy(model_template)

    train_acc: List[float] = []
    val_acc: List[float] = []

    def record(epoch: int, loss: float) -> None:
        train_acc.append(rotation_accuracy(model, train_images, cfg.score_batch_size))
        val_acc.append(rotation_accuracy(model, val_images, cfg.score_batch_size))
        logger.info(f"probe epoch {epoch}: train_acc={train_acc[-1]:.4f} val_acc={val_acc[-1]:.4f}")

    _train_epochs(model, train_images, cfg, max_epochs,
                  lambda p, y, _: loss_crs(p, y), "probe", cfg.seed, on_epoch=record)

    epoch = find_overfit_epoch(val_acc, cfg.probe_window)
    degraded = epoch is not None
    if not degraded:
        logger.warning(f"Validation accuracy never degraded within {max_epochs} epochs; using beta1={max_epochs}")
        epoch = max_epochs
    else:
        logger.info(f"Overfit probe selected beta1={epoch}")
    return OverfitCurve(
        train_accuracy=train_acc,
        val_accuracy=val_acc,
        smoothed_val_accuracy=smooth(val_acc, cfg.probe_window),
        overfit_epoch=epoch,
        degraded=degraded,
    )


def overfit_probe(corpus: Corpus, model_template: RotationPredictor, cfg: SamplerConfig,
                  max_epochs: Optional[int] = None) -> int:
    """Epoch just before held-out rotation accuracy starts to degrade."""
    return run_overfit_probe(corpus, model_template, cfg, max_epochs).overfit_epoch


def tune_check(acc1: float, acc2: float, tol: float = 0.01) -> bool:
    """Whether Step 2 left rotation accuracy unchanged within ``tol``."""
    for name, acc in (("acc1", acc1), ("acc2", acc2)):
        if not 0.0 <= acc <= 1.0 or math.isnan(acc):
            raise ValueError(f"{name} must lie in [0, 1], got {acc}")
    # absorbs float error in e.g. |0.805 - 0.80|
    return abs(acc2 - acc1) <= tol + 1e-12