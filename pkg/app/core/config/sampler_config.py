from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .base_config import DEFAULT_RHO, EncoderConfig, OptimizerConfig


class SamplerConfig(BaseModel):
    """Hyperparameters of the two-step rotation-agnostic image sampler.

    beta1 set to None (or "auto" in a config file) asks the pipeline to pick
    it with the overfit probe.
    """
    model_config = ConfigDict(extra="forbid")

    beta1: Optional[int] = Field(10, ge=1)
    beta2: int = Field(200, ge=1)
    lambda_max: float = Field(0.20, gt=0)
    margin: float = 0.20
    rho: float = DEFAULT_RHO
    batch_size: int = Field(64, ge=1)
    optimizer: OptimizerConfig = Field(
        default_factory=lambda: OptimizerConfig(name="adam", lr=1e-3, weight_decay=0.0)
    )
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    seed: int = 0

    # overfit probe
    probe_max_epochs: int = Field(30, ge=1)
    probe_window: int = Field(3, ge=1)
    probe_train_fraction: float = Field(0.8, gt=0, lt=1)

    # tuning criterion
    tune_tolerance: float = Field(0.01, ge=0)
    n_runs: int = Field(3, ge=1)

    score_batch_size: int = Field(256, ge=1)

    @field_validator("beta1", mode="before")
    @classmethod
    def parse_auto(cls, v):
        if isinstance(v, str) and v.strip().lower() == "auto":
            return None
        return v

    @model_validator(mode="after")
    def check_margin(self):
        if not 0 < self.margin < self.rho:
            raise ValueError(f"margin must lie in (0, rho={self.rho:.6f}), got {self.margin}")
        return self

    @property
    def threshold(self) -> float:
        """Score above which an image is rotation-agnostic."""
        return self.rho + self.margin
