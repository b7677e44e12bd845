"""Contrastive pretraining loop."""
import json
import logging
import math
from contextlib import nullcontext
from typing import Dict, List, Optional, Sequence

import torch
import torch.nn as nn
from pydantic import BaseModel, ConfigDict
from torch.utils.data import DataLoader

from ..config.experiment_config import ExperimentConfig
from ..config.base_config import MonitoringConfig
from ..errors import ConfigError, NumericalError
from ..etl.augmentations import build_augmentation
from ..etl.corpus import TwoViewDataset, corpus_to_tensor
from ..monitoring.training_monitor import TrainingMonitor
from ..optimization.schedules import build_optimizer, build_scheduler
from ..rotation.types import ImageSample
from ..storage.artifact_repository import ArtifactRepository
from ..storage.models import MetricRecord, RaiPartition
from ..utils.seeding import make_generator, seed_everything, worker_init_fn
from .frameworks import MoCoV2, build_framework

logger = logging.getLogger(__name__)


class PretrainResult(BaseModel):
    """Trained encoder and its loss series."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    encoder: nn.Module
    epoch_losses: List[float]
    step_losses: List[float]
    steps: int
    mean_step_seconds: Optional[float] = None


def resolve_verdicts(cfg: ExperimentConfig, ids: Sequence[str],
                     partition: Optional[RaiPartition]) -> Dict[str, Optional[bool]]:
    """Per-image RAI verdict as the augmentation mode sees it.

    Modes that do not depend on the partition never read it.
    """
    if not cfg.mode.needs_partition:
        return {i: None for i in ids}
    if partition is None:
        raise ConfigError(f"mode {cfg.mode.value} needs a partition (experiment.partition_path or --partition)")
    missing = partition.covers(ids)
    if missing:
        raise ConfigError(f"partition lacks {len(missing)} training images, e.g. {missing[0]}")
    lookup = partition.verdicts()
    return {i: lookup[i] for i in ids}


def build_loader(cfg: ExperimentConfig, images: torch.Tensor, seed: int) -> DataLoader:
    if images.shape[0] < cfg.batch_size:
        raise ConfigError(f"corpus of {images.shape[0]} images is smaller than batch_size={cfg.batch_size}")
    transform = build_augmentation(cfg.augmentation, images.shape[-1])
    return DataLoader(
        TwoViewDataset(images, transform),
        batch_size=cfg.batch_size,
        shuffle=True,
        drop_last=True,
        num_workers=cfg.num_workers,
        generator=make_generator(seed),
        worker_init_fn=worker_init_fn if cfg.num_workers else None,
    )


def warm_fill_queue(framework: MoCoV2, loader: DataLoader) -> int:
    """Fill the MoCo queue with keys before any loss is recorded.

    Returns:
        Number of batches enqueued
    """
    batches = 0
    max_passes = math.ceil(framework.queue.capacity / (len(loader) * loader.batch_size)) + 1
    for _ in range(max_passes):
        for _, view2, _ in loader:
            framework.warm_fill(view2)
            batches += 1
            if framework.queue.is_full:
                logger.info(f"Queue warm-filled with {len(framework.queue)} keys in {batches} batches")
                return batches
    logger.warning(f"Queue holds {len(framework.queue)} of {framework.queue.capacity} keys after warm-fill")
    return batches


def pretrain(cfg: ExperimentConfig, corpus: Sequence[ImageSample],
             partition: Optional[RaiPartition] = None,
             repository: Optional[ArtifactRepository] = None,
             monitoring: Optional[MonitoringConfig] = None) -> PretrainResult:
    """Run the configured framework over the corpus.

    Args:
        cfg: Experiment configuration
        corpus: Training images
        partition: RAI partition, read only by partition-driven modes
        repository: When given, receives the metrics log, metrics textfile,
            checkpoints and the optional batch-spec dump
        monitoring: Logging cadence and metrics export settings

    Returns:
        PretrainResult with the trained encoder and loss series
    """
    monitoring = monitoring or MonitoringConfig()
    ids = [img.id for img in corpus]
    verdict_of = resolve_verdicts(cfg, ids, partition)

    seed_everything(cfg.seed)
    images = corpus_to_tensor(corpus)
    framework = build_framework(cfg)
    loader = build_loader(cfg, images, cfg.seed)
    optimizer = build_optimizer(framework.online_parameters(), cfg.optimizer)
    scheduler = build_scheduler(optimizer, cfg.optimizer, cfg.epochs, len(loader))
    monitor = TrainingMonitor(cfg.framework.value, cfg.mode.value)

    framework.train()
    if isinstance(framework, MoCoV2):
        warm_fill_queue(framework, loader)

    epoch_losses: List[float] = []
    step_losses: List[float] = []
    step = 0
    log_context = repository.metrics_log() if repository is not None else nullcontext()
    try:
        with log_context as metrics_log:
            for epoch in range(1, cfg.epochs + 1):
                running = 0.0
                for view1, view2, index in loader:
                    verdicts = [verdict_of[ids[i]] for i in index.tolist()]
                    with monitor.time_step():
                        loss = framework.compute_loss(view1, view2, verdicts)
                        if not torch.isfinite(loss):
                            monitor.record_failure()
                            diagnostics = {"epoch": epoch, "step": step, "lr": scheduler.get_last_lr()[0]}
                            logger.error(f"Non-finite loss in {cfg.framework.value}/{cfg.mode.value}: {diagnostics}")
                            if repository is not None:
                                # parameters still hold the last finite step
                                path = repository.save_checkpoint(
                                    framework.encoder, "checkpoints/last_good.pt", cfg, diagnostics
                                )
                                diagnostics["checkpoint"] = str(path)
                            raise NumericalError(f"pretraining diverged at epoch {epoch}, step {step}", diagnostics)
                        if step == 0 and cfg.debug_specs and repository is not None:
                            specs = framework.batch_specs(verdicts)
                            repository.save_text(
                                "".join(json.dumps(s.model_dump()) + "\n" for s in specs), "batch_specs.jsonl"
                            )
                        optimizer.zero_grad()
                        loss.backward()
                        optimizer.step()
                        framework.on_after_step()
                    lr = scheduler.get_last_lr()[0]
                    scheduler.step()

                    value = float(loss.detach())
                    step_losses.append(value)
                    running += value
                    monitor.record_step(value)
                    if metrics_log is not None:
                        metrics_log.write(MetricRecord(
                            epoch=epoch, step=step, loss=value, lr=lr, mode=cfg.mode, framework=cfg.framework,
                        ))
                    if step % monitoring.log_every_n_steps == 0:
                        logger.debug(f"step {step}: loss={value:.4f} lr={lr:.2e}")
                    step += 1
                mean_loss = running / len(loader)
                epoch_losses.append(mean_loss)
                monitor.record_epoch(mean_loss)
                logger.info(
                    f"{cfg.framework.value}/{cfg.mode.value} epoch {epoch}/{cfg.epochs}: "
                    f"loss={mean_loss:.4f} lr={scheduler.get_last_lr()[0]:.2e}"
                )
    finally:
        if repository is not None and monitoring.export_metrics:
            exported = monitor.export(repository.path("metrics.prom"))
            if exported is not None:
                repository.track(exported)

    if repository is not None:
        repository.save_checkpoint(framework.encoder, "checkpoints/encoder.pt", cfg, {"epoch_losses": epoch_losses})
    return PretrainResult(
        encoder=framework.encoder, epoch_losses=epoch_losses, step_losses=step_losses, steps=step,
        mean_step_seconds=monitor.mean_step_seconds(),
    )
