import math

import numpy as np
import pytest
import torch

from app.core.config.base_config import EncoderConfig
from app.core.config.experiment_config import LinearProbeConfig
from app.core.errors import ShapeError
from app.core.lineval.probe import (
    evaluate_encoder, extract_features, fit_linear_classifier, linear_probe, run_linear_probe,
)
from app.core.models.encoders import build_encoder
from tests.fixtures.stubs import parameter_bytes


def _blobs(n_per_class: int = 200, seed: int = 0):
    rng = np.random.default_rng(seed)
    a = rng.normal(loc=-3.0, scale=0.5, size=(n_per_class, 5))
    b = rng.normal(loc=3.0, scale=0.5, size=(n_per_class, 5))
    return np.vstack([a, b]), np.array([0] * n_per_class + [1] * n_per_class)


def test_linear_probe_separable(probe_config):
    features, labels = _blobs()
    assert linear_probe(features, labels, probe_config) >= 0.99


def test_linear_probe_shuffled_labels_near_chance(probe_config):
    rng = np.random.default_rng(1)
    features = rng.normal(size=(2000, 8))
    labels = rng.integers(0, 4, size=2000)
    result = run_linear_probe(features, labels, probe_config)
    sigma = math.sqrt(0.25 * 0.75 / result.n_test)
    assert abs(result.top1 - 0.25) <= 3 * sigma
    assert result.n_classes == 4


def test_linear_probe_accepts_string_labels(probe_config):
    features, labels = _blobs(50)
    result = run_linear_probe(features, np.where(labels == 0, "cat", "dog"), probe_config)
    assert result.top1 >= 0.99
    assert result.n_train + result.n_test == 100


def test_linear_probe_lr_grid_keeps_every_rate(probe_config):
    features, labels = _blobs(50)
    cfg = probe_config.model_copy(update={"lr_grid": [0.01, 0.1]})
    result = run_linear_probe(features, labels, cfg)
    assert set(result.accuracy_by_lr) == {0.01, 0.1}
    assert result.top1 == max(result.accuracy_by_lr.values())


def test_linear_probe_errors(probe_config):
    features, labels = _blobs(20)
    with pytest.raises(ValueError):
        linear_probe(features, np.zeros(len(labels)), probe_config)
    with pytest.raises(ShapeError):
        linear_probe(features, labels[:-1], probe_config)
    with pytest.raises(ShapeError):
        linear_probe(features[:, 0], labels, probe_config)
    bad = features.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        linear_probe(bad, labels, probe_config)


def test_milestones_validation():
    with pytest.raises(ValueError):
        LinearProbeConfig(milestones=[0.75, 0.6])
    with pytest.raises(ValueError):
        LinearProbeConfig(milestones=[0.6, 1.0])


def test_fit_invariant_to_training_row_permutation():
    features, labels = _blobs(30, seed=2)
    train_x, train_y = features[::2].copy(), labels[::2].copy()
    test_x, test_y = features[1::2].copy(), labels[1::2].copy()
    cfg = LinearProbeConfig(epochs=10, batch_size=len(train_y), shuffle=False, seed=0)
    base = fit_linear_classifier(train_x, train_y, test_x, test_y, cfg)
    perm = np.random.default_rng(3).permutation(len(train_y))
    permuted = fit_linear_classifier(train_x[perm], train_y[perm], test_x, test_y, cfg)
    assert permuted == base


def test_extract_features_deterministic_and_frozen(tiny_corpus):
    torch.manual_seed(0)
    encoder = build_encoder(EncoderConfig(channels=[4, 8]))
    encoder.train()
    before = parameter_bytes(encoder)
    features = extract_features(encoder, [tiny_corpus[0], tiny_corpus[0], tiny_corpus[1]])
    assert features.shape == (3, encoder.out_dim)
    assert np.array_equal(features[0], features[1])
    assert parameter_bytes(encoder) == before
    assert encoder.training


def test_evaluate_encoder_leaves_encoder_untouched(tiny_corpus):
    torch.manual_seed(0)
    encoder = build_encoder(EncoderConfig(channels=[4, 8]))
    before = parameter_bytes(encoder)
    result = evaluate_encoder(encoder, tiny_corpus, LinearProbeConfig(epochs=5, batch_size=16))
    assert 0.0 <= result.top1 <= 1.0
    assert parameter_bytes(encoder) == before


@pytest.mark.filterwarnings("error:.*requires_grad.*:UserWarning")
def test_epoch_loss_logging_reads_detached_scalar(probe_config, caplog):
    features, labels = _blobs(50)
    with caplog.at_level("DEBUG", logger="app.core.lineval.probe"):
        linear_probe(features, labels, probe_config)
    assert any("loss=" in message for message in caplog.messages)
