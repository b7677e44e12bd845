"""Configuration models."""
from .base_config import (
    DEFAULT_RHO, DataConfig, EncoderConfig, MonitoringConfig, OptimizerConfig,
    SyntheticCorpusSpec,
)
from .experiment_config import (
    AugmentationStep, ExperimentConfig, LinearProbeConfig, ReportConfig, default_recipe,
)
from .pnda_config import PndaConfig, apply_overrides, config_hash, load_config
from .sampler_config import SamplerConfig

__all__ = [
    "DEFAULT_RHO", "DataConfig", "EncoderConfig", "MonitoringConfig", "OptimizerConfig",
    "SyntheticCorpusSpec", "AugmentationStep", "ExperimentConfig", "LinearProbeConfig",
    "ReportConfig", "default_recipe", "PndaConfig", "apply_overrides", "config_hash",
    "load_config", "SamplerConfig",
]
