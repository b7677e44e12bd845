from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..contrastive.roles import AugMode, Framework
from .base_config import EncoderConfig, OptimizerConfig

DEFAULT_TAU = {Framework.SIMCLR: 0.5, Framework.MOCO_V2: 0.2}
DEFAULT_WEIGHT_DECAY = {Framework.SIMCLR: 1e-6, Framework.MOCO_V2: 1e-4, Framework.BYOL: 1e-4}


class AugmentationStep(BaseModel):
    """One step of the view-generation recipe."""
    model_config = ConfigDict(extra="forbid")

    type: Literal["random_crop", "random_flip", "color_jitter", "grayscale", "gaussian_blur"]
    p: float = Field(1.0, ge=0, le=1)
    scale: Tuple[float, float] = (0.2, 1.0)
    horizontal: bool = True
    brightness: float = 0.4
    contrast: float = 0.4
    saturation: float = 0.4
    hue: float = 0.1
    kernel_size: int = 3
    sigma: Tuple[float, float] = (0.1, 2.0)


def default_recipe() -> List[AugmentationStep]:
    """Crop, horizontal flip, color jitter and grayscale."""
    return [
        AugmentationStep(type="random_crop"),
        AugmentationStep(type="random_flip", p=0.5),
        AugmentationStep(type="color_jitter", p=0.8),
        AugmentationStep(type="grayscale", p=0.2),
    ]


class ExperimentConfig(BaseModel):
    """Contrastive pretraining run configuration."""
    model_config = ConfigDict(extra="forbid")

    framework: Framework = Framework.SIMCLR
    mode: AugMode = AugMode.NONE
    partition_path: Optional[str] = None

    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    projection_dim: int = Field(128, ge=1)
    hidden_dim: int = Field(512, ge=1)

    tau: Optional[float] = Field(None, gt=0)
    alpha: float = Field(0.05, ge=0)
    batch_size: int = Field(128, ge=2)
    epochs: int = Field(300, ge=1)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    ema_momentum: float = Field(0.999, ge=0, lt=1)
    queue_size: int = Field(4096, ge=1)
    augmentation: List[AugmentationStep] = Field(default_factory=default_recipe)

    seed: int = 0
    num_workers: int = Field(0, ge=0)
    debug_specs: bool = False

    @model_validator(mode="after")
    def default_weight_decay(self):
        # an explicit optimizer.weight_decay always wins
        if "weight_decay" not in self.optimizer.model_fields_set:
            self.optimizer = self.optimizer.model_copy(
                update={"weight_decay": DEFAULT_WEIGHT_DECAY[self.framework]}
            )
        return self

    @model_validator(mode="after")
    def check_queue(self):
        if self.framework is Framework.MOCO_V2 and self.queue_size < self.batch_size:
            raise ValueError(
                f"queue_size ({self.queue_size}) must be >= batch_size ({self.batch_size}) for MoCo v2"
            )
        return self

    @property
    def effective_tau(self) -> Optional[float]:
        """Temperature in use; None for BYOL, which has no temperature."""
        if self.framework is Framework.BYOL:
            return None
        return self.tau if self.tau is not None else DEFAULT_TAU[self.framework]


class LinearProbeConfig(BaseModel):
    """Frozen-feature linear evaluation protocol."""
    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(90, ge=1)
    batch_size: int = Field(128, ge=1)
    lr: float = Field(0.1, gt=0)
    milestones: List[float] = Field(default_factory=lambda: [0.6, 0.75, 0.9])
    momentum: float = Field(0.9, ge=0, lt=1)
    weight_decay: float = Field(0.0, ge=0)
    test_fraction: float = Field(0.2, gt=0, lt=1)
    standardize: bool = True
    shuffle: bool = True
    lr_grid: Optional[List[float]] = None
    seed: int = 0

    @field_validator("milestones")
    @classmethod
    def validate_milestones(cls, v):
        if any(not 0 < f < 1 for f in v):
            raise ValueError("milestones must be fractions in (0, 1)")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("milestones must be strictly increasing")
        return v


class ReportConfig(BaseModel):
    """Diagnostic artifact settings."""
    model_config = ConfigDict(extra="forbid")

    histogram_bin_width: float = Field(0.05, gt=0)
    render_plots: bool = False
    ratios: List[float] = Field(default_factory=lambda: [0.0, 0.05, 0.2, 0.3, 1.0])
    results_filename: str = "results.csv"
