import json

import numpy as np
import pytest
import torch
import torch.nn as nn
import torch.nn.functional as F

from app.core.config.base_config import SyntheticCorpusSpec
from app.core.contrastive.roles import AugMode, Framework
from app.core.errors import ConfigError
from app.core.harness.ema import init_target, momentum_update
from app.core.harness.frameworks import BYOL, MoCoV2, SimCLR, build_framework
from app.core.harness.pretrain import pretrain, resolve_verdicts
from app.core.harness.queue import EmbeddingQueue
from app.core.harness.synthetic import ARROW, GRADIENT, RINGS, SYMMETRIC_NOISE, generate_synthetic_corpus
from app.core.rotation.ops import rotate_pixels
from app.core.rotation.types import Rotation, Verdict
from app.core.sampler.scoring import partition
from app.core.storage.artifact_repository import ArtifactRepository, read_metrics


def test_queue_fifo_and_size():
    queue = EmbeddingQueue(capacity=5, dim=2)
    queue.enqueue(torch.tensor([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))
    assert len(queue) == 3 and not queue.is_full
    queue.enqueue(torch.tensor([[3.0, 3.0], [4.0, 4.0], [5.0, 5.0]]))
    assert len(queue) == 5 and queue.is_full
    assert queue.contents()[:, 0].tolist() == [1.0, 2.0, 3.0, 4.0, 5.0]
    queue.enqueue(torch.full((7, 2), 9.0))
    assert queue.contents()[:, 0].tolist() == [9.0] * 5


def test_queue_rejects_bad_keys():
    with pytest.raises(ValueError):
        EmbeddingQueue(capacity=0, dim=2)
    with pytest.raises(ValueError):
        EmbeddingQueue(capacity=4, dim=2).enqueue(torch.zeros(2, 3))


def test_momentum_zero_copies_online():
    online, target = nn.Linear(3, 2), nn.Linear(3, 2)
    momentum_update(online, target, 0.0)
    assert torch.equal(online.weight, target.weight)
    assert torch.equal(online.bias, target.bias)


def test_momentum_update_converges():
    online, target = nn.Linear(3, 2), nn.Linear(3, 2)
    gap = (online.weight - target.weight).abs().max().item()
    for _ in range(20):
        momentum_update(online, target, 0.5)
    assert (online.weight - target.weight).abs().max().item() <= gap * 0.5 ** 20 + 1e-7
    with pytest.raises(ValueError):
        momentum_update(online, target, 1.0)


def test_init_target_freezes():
    online, target = nn.Linear(3, 2), nn.Linear(3, 2)
    init_target(online, target)
    assert torch.equal(online.weight, target.weight)
    assert not any(p.requires_grad for p in target.parameters())


def test_synthetic_corpus_properties():
    spec = SyntheticCorpusSpec(n_rai=6, n_nonrai=6, image_size=12, noise_sigma=0.0, seed=1)
    corpus = generate_synthetic_corpus(spec)
    assert [img.id for img in corpus[:2]] == ["syn-000000", "syn-000001"]
    assert sum(img.truth is Verdict.RAI for img in corpus) == 6
    assert {img.label for img in corpus} == {RINGS, SYMMETRIC_NOISE, GRADIENT, ARROW}
    for img in corpus:
        assert img.pixels.shape == (12, 12, 3)
        assert 0.0 <= img.pixels.min() and img.pixels.max() <= 1.0
        invariant = np.allclose(rotate_pixels(img.pixels, Rotation.R90), img.pixels, atol=1e-9)
        assert invariant == (img.truth is Verdict.RAI)


def test_synthetic_corpus_is_deterministic():
    spec = SyntheticCorpusSpec(n_rai=4, n_nonrai=4, image_size=8, seed=5)
    first, second = generate_synthetic_corpus(spec), generate_synthetic_corpus(spec)
    assert all(np.array_equal(a.pixels, b.pixels) for a, b in zip(first, second))
    other = generate_synthetic_corpus(spec.model_copy(update={"seed": 6}))
    assert not np.array_equal(first[0].pixels, other[0].pixels)


def _views(cfg, seed=0):
    gen = torch.Generator().manual_seed(seed)
    shape = (cfg.batch_size, 3, 8, 8)
    return torch.rand(shape, generator=gen, dtype=torch.float64), torch.rand(shape, generator=gen, dtype=torch.float64)


def test_simclr_none_mode_matches_vanilla(experiment_config):
    framework = SimCLR(experiment_config).double().eval()
    view1, view2 = _views(experiment_config)
    loss = framework.compute_loss(view1, view2, [None] * experiment_config.batch_size)

    m = experiment_config.batch_size
    z = framework.embed(torch.cat([view1, view2]))
    logits = z @ z.T / framework.tau
    logits.fill_diagonal_(float("-inf"))
    targets = torch.cat([torch.arange(m, 2 * m), torch.arange(m)])
    assert loss.item() == pytest.approx(F.cross_entropy(logits, targets).item(), abs=1e-10)


def test_moco_none_mode_matches_vanilla(experiment_config):
    cfg = experiment_config.model_copy(update={"framework": Framework.MOCO_V2})
    framework = MoCoV2(cfg).double().eval()
    framework.queue = EmbeddingQueue(cfg.queue_size, cfg.projection_dim, dtype=torch.float64)
    view1, view2 = _views(cfg)
    framework.warm_fill(view1)
    framework.warm_fill(view2)
    loss = framework.compute_loss(view1, view2, [None] * cfg.batch_size)

    q = framework.embed_query(view1)
    k = framework.embed_key(view2)
    logits = torch.cat([(q * k).sum(1, keepdim=True), q @ framework.queue.contents().T], dim=1) / framework.tau
    expected = F.cross_entropy(logits, torch.zeros(cfg.batch_size, dtype=torch.long))
    assert loss.item() == pytest.approx(expected.item(), abs=1e-10)


def test_byol_none_mode_matches_vanilla(experiment_config):
    cfg = experiment_config.model_copy(update={"framework": Framework.BYOL})
    framework = BYOL(cfg).double().eval()
    view1, view2 = _views(cfg)
    loss = framework.compute_loss(view1, view2, [None] * cfg.batch_size)
    p, z = framework.online(view1), framework.target(view2)
    expected = (2 - 2 * (p * z).sum(dim=1)).mean()
    assert loss.item() == pytest.approx(expected.item(), abs=1e-10)


def test_moco_never_enqueues_rotated_keys(experiment_config):
    cfg = experiment_config.model_copy(update={"framework": Framework.MOCO_V2, "mode": AugMode.PDA,
                                               "queue_size": 32})
    framework = build_framework(cfg)
    view1, view2 = _views(cfg)
    framework.warm_fill(view1.float())
    before = len(framework.queue)
    loss = framework.compute_loss(view1.float(), view2.float(), [None] * cfg.batch_size)
    loss.backward()
    framework.on_after_step()
    assert len(framework.queue) == before + cfg.batch_size


def test_moco_requires_warm_queue(experiment_config):
    cfg = experiment_config.model_copy(update={"framework": Framework.MOCO_V2})
    framework = build_framework(cfg)
    view1, view2 = _views(cfg)
    with pytest.raises(ValueError):
        framework.compute_loss(view1.float(), view2.float(), [None] * cfg.batch_size)


def test_byol_target_receives_no_gradient(experiment_config):
    cfg = experiment_config.model_copy(update={"framework": Framework.BYOL, "mode": AugMode.PNDA})
    framework = build_framework(cfg)
    view1, view2 = _views(cfg)
    verdicts = [i % 2 == 0 for i in range(cfg.batch_size)]
    framework.compute_loss(view1.float(), view2.float(), verdicts).backward()
    assert all(p.grad is None for p in framework.target_backbone.parameters())
    assert all(p.grad is None for p in framework.target_projector.parameters())
    assert any(p.grad is not None for p in framework.predictor.parameters())
    online_ids = {id(p) for p in framework.online_parameters()}
    assert not any(id(p) in online_ids for p in framework.target_backbone.parameters())


def test_simclr_redraws_rotation_pair(experiment_config):
    cfg = experiment_config.model_copy(update={"mode": AugMode.PDA})
    framework = build_framework(cfg)
    view1, view2 = _views(cfg)
    seen = set()
    for _ in range(20):
        framework.compute_loss(view1.float(), view2.float(), [None] * cfg.batch_size)
        assert framework.thetas[0] != framework.thetas[1]
        seen.add(framework.thetas)
    assert len(seen) > 1


def test_resolve_verdicts_modes(experiment_config, tiny_corpus):
    ids = [img.id for img in tiny_corpus]
    assert set(resolve_verdicts(experiment_config, ids, None).values()) == {None}
    pnda = experiment_config.model_copy(update={"mode": AugMode.PNDA})
    with pytest.raises(ConfigError):
        resolve_verdicts(pnda, ids, None)
    partial = partition({i: 1.0 for i in ids[:-1]}, 0.69, 0.2)
    with pytest.raises(ConfigError):
        resolve_verdicts(pnda, ids, partial)
    full = partition({i: 1.0 for i in ids}, 0.69, 0.2)
    assert all(resolve_verdicts(pnda, ids, full).values())


@pytest.mark.parametrize("framework, mode", [
    (Framework.SIMCLR, AugMode.PNDA),
    (Framework.MOCO_V2, AugMode.PNDA),
    (Framework.BYOL, AugMode.PNDA),
    (Framework.SIMCLR, AugMode.POSITIVE_ONLY),
])
def test_pretrain_runs_every_framework(experiment_config, tiny_corpus, repository, framework, mode):
    cfg = experiment_config.model_copy(update={"framework": framework, "mode": mode, "epochs": 1})
    scores = {img.id: (1.2 if img.truth is Verdict.RAI else 0.1) for img in tiny_corpus}
    result = pretrain(cfg, tiny_corpus, partition(scores, 0.69, 0.2), repository)
    assert result.steps == len(tiny_corpus) // cfg.batch_size
    assert all(np.isfinite(result.step_losses))
    assert repository.path("checkpoints/encoder.pt").is_file()
    records = read_metrics(repository.path("metrics.jsonl"))
    assert len(records) == result.steps
    assert records[0].mode is mode


def test_pretrain_is_deterministic(experiment_config, tiny_corpus):
    cfg = experiment_config.model_copy(update={"mode": AugMode.PDA})
    first = pretrain(cfg, tiny_corpus)
    second = pretrain(cfg, tiny_corpus)
    assert first.step_losses == second.step_losses


def test_repeated_pretrain_writes_identical_artifacts(experiment_config, tiny_corpus, tmp_path):
    """Run artifacts repeat byte for byte; wall-clock data stays out of them."""
    cfg = experiment_config.model_copy(update={"mode": AugMode.PDA, "epochs": 1})
    first, second = ArtifactRepository(tmp_path / "a"), ArtifactRepository(tmp_path / "b")
    result = pretrain(cfg, tiny_corpus, None, first)
    pretrain(cfg, tiny_corpus, None, second)

    for name in ("metrics.jsonl", "metrics.prom"):
        assert first.path(name).read_bytes() == second.path(name).read_bytes()
    assert "_created" not in first.path("metrics.prom").read_text()
    assert result.mean_step_seconds > 0.0


def test_pretrain_writes_batch_spec_dump(experiment_config, tiny_corpus, repository):
    cfg = experiment_config.model_copy(update={"mode": AugMode.NDA, "debug_specs": True, "epochs": 1})
    pretrain(cfg, tiny_corpus, None, repository)
    lines = repository.path("batch_specs.jsonl").read_text().splitlines()
    assert len(lines) == 2 * cfg.batch_size
    assert all(len(json.loads(line)["positives"]) == 1 for line in lines)


def test_pretrain_rejects_small_corpus(experiment_config, tiny_corpus):
    cfg = experiment_config.model_copy(update={"batch_size": 64})
    with pytest.raises(ConfigError):
        pretrain(cfg, tiny_corpus)


def test_symmetric_images_stay_invariant_under_noise():
    """Pixel noise on symmetric images is itself symmetric, bit for bit."""
    spec = SyntheticCorpusSpec(n_rai=4, n_nonrai=4, image_size=9, noise_sigma=0.05, seed=2)
    for img in generate_synthetic_corpus(spec):
        turned = rotate_pixels(img.pixels, Rotation.R90)
        if img.truth is Verdict.RAI:
            assert np.array_equal(turned, img.pixels)
        else:
            assert not np.allclose(turned, img.pixels, atol=1e-3)
