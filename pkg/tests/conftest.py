import pytest
import yaml
from typing import Dict, Any, List

from app.core.config.base_config import EncoderConfig, OptimizerConfig, SyntheticCorpusSpec
from app.core.config.experiment_config import AugmentationStep, ExperimentConfig, LinearProbeConfig
from app.core.config.sampler_config import SamplerConfig
from app.core.harness.synthetic import generate_synthetic_corpus
from app.core.rotation.types import ImageSample
from app.core.storage.artifact_repository import ArtifactRepository

TINY_ENCODER = {"name": "conv", "channels": [4, 8], "in_channels": 3}


@pytest.fixture
def tiny_spec() -> SyntheticCorpusSpec:
    """16 + 16 images of 8 x 8 pixels."""
    return SyntheticCorpusSpec(n_rai=16, n_nonrai=16, image_size=8, channels=3, noise_sigma=0.02, seed=3)


@pytest.fixture
def tiny_corpus(tiny_spec) -> List[ImageSample]:
    return generate_synthetic_corpus(tiny_spec)


@pytest.fixture
def sampler_config() -> SamplerConfig:
    return SamplerConfig(
        beta1=2,
        beta2=2,
        batch_size=8,
        encoder=EncoderConfig(**TINY_ENCODER),
        optimizer=OptimizerConfig(name="adam", lr=1e-3, weight_decay=0.0),
        probe_max_epochs=3,
        seed=0,
    )


@pytest.fixture
def experiment_config() -> ExperimentConfig:
    return ExperimentConfig(
        framework="simclr",
        mode="none",
        encoder=EncoderConfig(**TINY_ENCODER),
        projection_dim=8,
        hidden_dim=16,
        batch_size=8,
        epochs=2,
        queue_size=16,
        optimizer=OptimizerConfig(name="sgd", lr=0.05),
        augmentation=[AugmentationStep(type="random_crop", scale=(0.5, 1.0)),
                      AugmentationStep(type="random_flip", p=0.5)],
        seed=0,
    )


@pytest.fixture
def probe_config() -> LinearProbeConfig:
    return LinearProbeConfig(epochs=30, batch_size=32, lr=0.1, seed=0)


@pytest.fixture
def repository(tmp_path) -> ArtifactRepository:
    return ArtifactRepository(tmp_path / "run")


@pytest.fixture
def tiny_config_dict() -> Dict[str, Any]:
    """Full pipeline configuration small enough for a CPU test run."""
    return {
        "data": {"synthetic": {"n_rai": 16, "n_nonrai": 16, "image_size": 8, "seed": 3}},
        "sampler": {
            "beta1": 1,
            "beta2": 2,
            "batch_size": 8,
            "encoder": TINY_ENCODER,
            "tune_tolerance": 1.0,
            "n_runs": 1,
        },
        "experiment": {
            "framework": "simclr",
            "mode": "none",
            "encoder": TINY_ENCODER,
            "projection_dim": 8,
            "hidden_dim": 16,
            "batch_size": 8,
            "epochs": 1,
            "queue_size": 16,
            "augmentation": [{"type": "random_flip", "p": 0.5}],
        },
        "lineval": {"epochs": 3, "batch_size": 16},
        "monitoring": {"logging_level": "WARNING"},
    }


@pytest.fixture
def tiny_config_file(tmp_path, tiny_config_dict) -> str:
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(tiny_config_dict))
    return str(path)
