"""Pretraining and linear evaluation commands."""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import torch.nn as nn

from ..config.experiment_config import ExperimentConfig
from ..config.pnda_config import PndaConfig, config_hash
from ..errors import ConfigError
from ..etl.corpus import load_configured_corpus
from ..harness.pretrain import pretrain
from ..lineval.probe import evaluate_encoder
from ..models.encoders import build_encoder
from ..rotation.types import ImageSample
from ..storage.artifact_repository import load_checkpoint, load_partition
from ..storage.models import RaiPartition, ResultRecord
from .base_workflow import BaseWorkflow

logger = logging.getLogger(__name__)


def load_encoder(path: Union[str, Path]) -> Tuple[nn.Module, ExperimentConfig]:
    """Rebuild a pretrained encoder from its checkpoint and embedded config."""
    blob = load_checkpoint(path)
    if blob.get("config") is None:
        raise ConfigError(f"Checkpoint {path} carries no experiment config")
    try:
        experiment = ExperimentConfig.model_validate(blob["config"])
    except ValueError as e:
        raise ConfigError(f"Checkpoint {path} does not hold a pretraining config: {e}") from e
    encoder = build_encoder(experiment.encoder)
    encoder.load_state_dict(blob["state_dict"])
    return encoder, experiment


def result_record(experiment: ExperimentConfig, top1: float, digest: str,
                  ratio: Optional[float] = None) -> ResultRecord:
    return ResultRecord(
        framework=experiment.framework.value,
        mode=experiment.mode.value,
        encoder=experiment.encoder.name,
        top1=top1,
        seed=experiment.seed,
        config_hash=digest,
        ratio=ratio,
    )


class PretrainWorkflow(BaseWorkflow):
    """``pretrain``: train one framework in one augmentation mode."""

    command = "pretrain"

    def __init__(self, config: PndaConfig, output_dir, config_path=None):
        super().__init__(config, output_dir, config_path)
        self.corpus: List[ImageSample] = []
        self.partition: Optional[RaiPartition] = None
        self.encoder: Optional[nn.Module] = None

    def setup(self) -> None:
        experiment = self.config.experiment
        self.corpus = load_configured_corpus(self.config.data)
        # only partition-driven modes open the partition file
        if experiment.mode.needs_partition:
            if experiment.partition_path is None:
                raise ConfigError(
                    f"mode {experiment.mode.value} needs experiment.partition_path or --partition"
                )
            self.partition = load_partition(experiment.partition_path)

    def run(self) -> Dict[str, Any]:
        result = pretrain(
            self.config.experiment, self.corpus, self.partition, self.repository, self.config.monitoring
        )
        self.encoder = result.encoder
        return {
            "framework": self.config.experiment.framework.value,
            "mode": self.config.experiment.mode.value,
            "steps": result.steps,
            "epoch_losses": result.epoch_losses,
            "mean_step_seconds": result.mean_step_seconds,
        }


class LinevalWorkflow(BaseWorkflow):
    """``lineval``: linear probe on a pretrained encoder, appended to the results table."""

    command = "lineval"

    def __init__(self, config: PndaConfig, output_dir, config_path=None,
                 checkpoint: Optional[Union[str, Path]] = None):
        super().__init__(config, output_dir, config_path)
        self.checkpoint = Path(checkpoint) if checkpoint else self.repository.path("checkpoints/encoder.pt")
        self.corpus: Sequence[ImageSample] = []
        self.encoder: Optional[nn.Module] = None
        self.experiment: Optional[ExperimentConfig] = None

    @property
    def seed(self) -> Optional[int]:
        return self.config.lineval.seed

    def setup(self) -> None:
        self.encoder, self.experiment = load_encoder(self.checkpoint)
        self.corpus = load_configured_corpus(self.config.data)
        if any(img.label is None for img in self.corpus):
            raise ConfigError("linear evaluation needs a class label on every image of the corpus")

    def run(self) -> Dict[str, Any]:
        probe = evaluate_encoder(self.encoder, self.corpus, self.config.lineval)
        record = result_record(self.experiment, probe.top1, config_hash(self.config))
        self.repository.append_result(record, self.config.report.results_filename)
        logger.info(
            f"{record.framework}/{record.mode} top-1 {probe.top1:.4f} "
            f"(lr {probe.lr:g}, {probe.n_test} held-out images)"
        )
        return {"checkpoint": str(self.checkpoint), **probe.model_dump(exclude={"accuracy_by_lr"}),
                "accuracy_by_lr": {str(k): v for k, v in probe.accuracy_by_lr.items()}}
