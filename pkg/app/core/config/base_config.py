import math
import os
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DEFAULT_RHO = math.log(4) / 2


class OptimizerConfig(BaseModel):
    """Optimizer and learning-rate schedule configuration."""
    model_config = ConfigDict(extra="forbid")

    name: Literal["sgd", "adam"] = "sgd"
    lr: float = Field(0.125, gt=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    weight_decay: float = Field(1e-4, ge=0)
    schedule: Literal["cosine", "constant"] = "cosine"
    warmup_epochs: int = Field(0, ge=0)


class EncoderConfig(BaseModel):
    """Feature extractor configuration."""
    model_config = ConfigDict(extra="forbid")

    name: Literal["conv", "resnet18_star", "resnet18"] = "conv"
    channels: List[int] = Field(default_factory=lambda: [32, 64, 128, 128])
    in_channels: int = Field(3, ge=1)

    @field_validator("channels")
    @classmethod
    def validate_channels(cls, v):
        if not v or any(c <= 0 for c in v):
            raise ValueError("channels must be a non-empty list of positive widths")
        return v


class MonitoringConfig(BaseModel):
    """Logging and metrics export configuration."""
    model_config = ConfigDict(extra="forbid")

    logging_level: str = "INFO"
    export_metrics: bool = True
    log_every_n_steps: int = Field(10, ge=1)


class SyntheticCorpusSpec(BaseModel):
    """Recipe for a labelled corpus of rotation-symmetric and oriented images."""
    model_config = ConfigDict(extra="forbid")

    n_rai: int = Field(1000, ge=0)
    n_nonrai: int = Field(1000, ge=0)
    image_size: int = Field(32, ge=4)
    channels: int = Field(3, ge=1)
    noise_sigma: float = Field(0.02, ge=0)
    seed: int = 0


class DataConfig(BaseModel):
    """Where the training corpus comes from."""
    model_config = ConfigDict(extra="forbid")

    corpus_path: Optional[str] = None
    synthetic: Optional[SyntheticCorpusSpec] = None

    @model_validator(mode="after")
    def check_source(self):
        if (self.corpus_path is None) == (self.synthetic is None):
            raise ValueError("exactly one of data.corpus_path or data.synthetic must be set")
        return self

    def resolve_corpus_path(self) -> Optional[Path]:
        """Resolve a relative corpus path against PNDA_DATA_DIR."""
        if self.corpus_path is None:
            return None
        path = Path(self.corpus_path)
        if not path.is_absolute():
            path = Path(os.getenv("PNDA_DATA_DIR", ".")) / path
        return path
