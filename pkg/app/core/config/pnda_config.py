"""Root configuration, YAML loading and command-line overrides."""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..errors import ConfigError
from .base_config import DataConfig, MonitoringConfig, SyntheticCorpusSpec
from .experiment_config import ExperimentConfig, LinearProbeConfig, ReportConfig
from .sampler_config import SamplerConfig

logger = logging.getLogger(__name__)


class PndaConfig(BaseModel):
    """Configuration for every command of the pipeline."""
    model_config = ConfigDict(extra="forbid")

    data: DataConfig = Field(default_factory=lambda: DataConfig(synthetic=SyntheticCorpusSpec()))
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)
    lineval: LinearProbeConfig = Field(default_factory=LinearProbeConfig)
    monitoring: MonitoringConfig = Field(default_factory=MonitoringConfig)
    report: ReportConfig = Field(default_factory=ReportConfig)

    def with_seed(self, seed: Optional[int]) -> "PndaConfig":
        """Return a copy whose training seeds are all set to ``seed``."""
        if seed is None:
            return self
        return self.model_copy(update={
            "sampler": self.sampler.model_copy(update={"seed": seed}),
            "experiment": self.experiment.model_copy(update={"seed": seed}),
            "lineval": self.lineval.model_copy(update={"seed": seed}),
        })


def _set_nested(tree: Dict[str, Any], dotted_key: str, value: Any) -> None:
    node = tree
    parts = dotted_key.split(".")
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = {}
            node[part] = child
        elif not isinstance(child, dict):
            raise ConfigError(f"Cannot override '{dotted_key}': '{part}' is not a section")
        node = child
    node[parts[-1]] = value


def apply_overrides(raw: Dict[str, Any], overrides: Optional[List[str]]) -> Dict[str, Any]:
    """Apply ``key.sub=value`` overrides to a raw config tree.

    Values are parsed as YAML scalars, so ``true``, ``0.2`` and ``[1, 2]``
    keep their types.
    """
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"Override '{item}' is not of the form key=value")
        key, text = item.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"Override '{item}' has an empty key")
        try:
            value = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"Override '{item}' has an unparsable value: {e}") from e
        _set_nested(raw, key, value)
    return raw


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[List[str]] = None) -> PndaConfig:
    """Load and validate a configuration file.

    Args:
        path: YAML file; None starts from the built-in defaults
        overrides: ``key.sub=value`` strings applied before validation

    Returns:
        Validated PndaConfig
    """
    raw: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Config file {path} is not valid YAML: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"Config file {path} must contain a mapping at top level")

    raw = apply_overrides(raw, overrides)
    try:
        config = PndaConfig.model_validate(raw)
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        raise ConfigError(str(e)) from e
    return config


def config_hash(config: BaseModel) -> str:
    """Short stable digest of a configuration."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]
