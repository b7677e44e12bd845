import math

import numpy as np
import pytest
import torch

from app.core.contrastive.losses import (
    EmbeddingBatch, byol_loss, info_nce, l2_normalize, pnda_byol_batch, pnda_byol_loss, pnda_info_nce,
    pnda_info_nce_batch,
)
from app.core.contrastive.pair_sets import PairSpec
from app.core.contrastive.roles import RotationRole
from app.core.errors import ShapeError
from tests.fixtures.stubs import brute_force_multi_positive, random_unit


def _t(array) -> torch.Tensor:
    return torch.as_tensor(np.asarray(array), dtype=torch.float64)


E = torch.eye(4, dtype=torch.float64)


def test_info_nce_orthogonal_negative():
    """Positive equal to the anchor, one orthogonal negative, tau 1."""
    loss = info_nce(E[0], E[0], E[1:2], tau=1.0)
    assert loss.item() == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-12)
    assert loss.item() == pytest.approx(0.3133, abs=1e-4)


@pytest.mark.parametrize("k", [1, 3, 7])
def test_info_nce_equal_similarities(k):
    negatives = E[1:2].repeat(k, 1)
    loss = info_nce(E[0], E[1], negatives, tau=0.5)
    assert loss.item() == pytest.approx(math.log(1 + k), abs=1e-12)


def test_info_nce_small_temperature_limit():
    z_p = l2_normalize(torch.tensor([1.0, 0.1, 0.0, 0.0], dtype=torch.float64))
    assert info_nce(E[0], z_p, E[1:3], tau=0.01).item() < 1e-6


def test_info_nce_rejects_bad_temperature():
    with pytest.raises(ValueError):
        info_nce(E[0], E[0], E[1:2], tau=0.0)
    with pytest.raises(ValueError):
        info_nce(E[0], E[0], E[1:2], tau=-1.0)


def test_pnda_single_positive_equals_info_nce():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        k = int(rng.integers(1, 7))
        tau = float(rng.uniform(0.05, 1.0))
        pool = _t(random_unit(rng, k + 2, 5))
        spec = PairSpec(anchor_index=0, positives=(1,), negatives=tuple(range(2, k + 2)))
        expected = info_nce(pool[0], pool[1], pool[2:], tau)
        assert abs(pnda_info_nce(pool, spec, tau).item() - expected.item()) <= 1e-12


def test_pnda_info_nce_brute_force_oracle():
    rng = np.random.default_rng(1)
    for _ in range(500):
        n = int(rng.integers(3, 9))
        pool = random_unit(rng, n, 4)
        anchor = int(rng.integers(n))
        others = [j for j in range(n) if j != anchor]
        rng.shuffle(others)
        n_pos = int(rng.integers(1, len(others) + 1))
        n_neg = int(rng.integers(0, len(others) - n_pos + 1))
        positives, negatives = others[:n_pos], others[n_pos:n_pos + n_neg]
        tau = float(rng.uniform(0.05, 1.0))
        spec = PairSpec(anchor_index=anchor, positives=tuple(positives), negatives=tuple(negatives))
        value = pnda_info_nce(_t(pool), spec, tau).item()
        assert value == pytest.approx(brute_force_multi_positive(pool, anchor, positives, negatives, tau),
                                      abs=1e-10)


def test_pnda_info_nce_two_identical_positives():
    pool = torch.stack([E[0], E[0], E[0], E[1], E[2]])
    spec = PairSpec(anchor_index=0, positives=(1, 2), negatives=(3, 4))
    expected = brute_force_multi_positive(pool.numpy(), 0, [1, 2], [3, 4], 1.0)
    assert pnda_info_nce(pool, spec, 1.0).item() == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(math.log(2 + 2 * math.exp(-1)), abs=1e-12)


def test_pnda_info_nce_permutation_invariance():
    rng = np.random.default_rng(2)
    pool = _t(random_unit(rng, 8, 6))
    spec = PairSpec(anchor_index=0, positives=(1, 2, 3), negatives=(4, 5, 6, 7))
    base = pnda_info_nce(pool, spec, 0.3).item()
    perm = torch.as_tensor([0, 3, 1, 2, 6, 4, 7, 5])
    inverse = torch.argsort(perm)
    permuted = PairSpec(anchor_index=0, positives=tuple(int(inverse[i]) for i in (1, 2, 3)),
                        negatives=tuple(int(inverse[i]) for i in (4, 5, 6, 7)))
    assert pnda_info_nce(pool[perm], permuted, 0.3).item() == pytest.approx(base, abs=1e-12)


def test_pnda_info_nce_extra_negative_increases_loss():
    rng = np.random.default_rng(3)
    pool = _t(random_unit(rng, 6, 4))
    fewer = PairSpec(anchor_index=0, positives=(1, 2), negatives=(3, 4))
    more = PairSpec(anchor_index=0, positives=(1, 2), negatives=(3, 4, 5))
    assert pnda_info_nce(pool, more, 0.5).item() > pnda_info_nce(pool, fewer, 0.5).item()


def test_pair_spec_requires_positive():
    with pytest.raises(ValueError):
        PairSpec(anchor_index=0, positives=(), negatives=(1,))
    with pytest.raises(ValueError):
        PairSpec(anchor_index=0, positives=(1,), negatives=(1, 2))
    with pytest.raises(ValueError):
        PairSpec(anchor_index=1, positives=(1,), negatives=(2,))


def test_losses_finite_over_temperature_range():
    rng = np.random.default_rng(4)
    pool = _t(random_unit(rng, 10, 3))
    specs = [PairSpec(anchor_index=a, positives=((a + 1) % 10,),
                      negatives=tuple(j for j in range(10) if j not in (a, (a + 1) % 10))) for a in range(10)]
    for tau in (0.05, 0.1, 0.5, 1.0):
        assert torch.isfinite(pnda_info_nce_batch(pool, specs, tau)).all()


def test_embedding_batch_requires_unit_norm():
    with pytest.raises(ShapeError):
        EmbeddingBatch(torch.ones(3, 4))
    batch = EmbeddingBatch.from_raw(torch.randn(5, 4))
    assert len(batch) == 5
    spec = PairSpec(anchor_index=0, positives=(1,), negatives=(2, 3, 4))
    assert pnda_info_nce(batch, spec, 0.5).item() == pytest.approx(pnda_info_nce(batch.pool, spec, 0.5).item())


@pytest.mark.parametrize("z_p, expected", [(E[0], 0.0), (E[1], 2.0), (-E[0], 4.0)])
def test_byol_loss_examples(z_p, expected):
    assert byol_loss(E[0], z_p).item() == pytest.approx(expected, abs=1e-12)


def test_pnda_byol_positive_views_equal_anchor():
    assert pnda_byol_loss(E[0], E[0], rotated_pos=E[0].repeat(3, 1)).item() == pytest.approx(0.0, abs=1e-12)


def test_pnda_byol_negative_views():
    loss = pnda_byol_loss(E[0], E[0], rotated_neg=E[1:4], alpha=0.05)
    assert loss.item() == pytest.approx(-0.1, abs=1e-12)


def test_pnda_byol_rejects_both_sets():
    with pytest.raises(ValueError):
        pnda_byol_loss(E[0], E[0], rotated_pos=E[1:2], rotated_neg=E[2:3])
    with pytest.raises(ValueError):
        pnda_byol_loss(E[0], E[0], alpha=-0.1)


def test_pnda_byol_empty_sets_contribute_nothing():
    z_p = l2_normalize(torch.tensor([1.0, 1.0, 0.0, 0.0], dtype=torch.float64))
    plain = byol_loss(E[0], z_p)
    empty = torch.zeros(0, 4, dtype=torch.float64)
    assert pnda_byol_loss(E[0], z_p, rotated_pos=empty, rotated_neg=empty).item() == pytest.approx(plain.item())


def test_pnda_byol_batch_matches_per_sample():
    rng = np.random.default_rng(5)
    z_online = _t(random_unit(rng, 3, 4))
    z_target = _t(random_unit(rng, 3, 4))
    z_rotated = _t(random_unit(rng, 9, 4)).reshape(3, 3, 4)
    roles = [RotationRole.POSITIVE, RotationRole.NEGATIVE, RotationRole.IGNORE]
    batch = pnda_byol_batch(z_online, z_target, z_rotated, roles, alpha=0.05)
    assert batch[0].item() == pytest.approx(pnda_byol_loss(z_online[0], z_target[0], rotated_pos=z_rotated[0]).item())
    assert batch[1].item() == pytest.approx(
        pnda_byol_loss(z_online[1], z_target[1], rotated_neg=z_rotated[1], alpha=0.05).item()
    )
    assert batch[2].item() == pytest.approx(byol_loss(z_online[2], z_target[2]).item())


def test_pnda_byol_batch_needs_rotations_for_rotation_roles():
    with pytest.raises(ValueError):
        pnda_byol_batch(E[:2], E[:2], None, [RotationRole.POSITIVE, RotationRole.NONE])


def test_contrastive_gradcheck():
    rng = np.random.default_rng(6)
    for _ in range(100):
        pool = _t(random_unit(rng, 6, 3)).requires_grad_(True)
        spec = PairSpec(anchor_index=0, positives=(1, 2), negatives=(3, 4, 5))
        tau = float(rng.uniform(0.1, 1.0))
        assert torch.autograd.gradcheck(lambda p: pnda_info_nce(p, spec, tau), (pool,), rtol=1e-4)
        assert torch.autograd.gradcheck(
            lambda a, b, n: info_nce(a, b, n, tau), (pool[0].detach().clone().requires_grad_(True),
                                                     pool[1].detach().clone().requires_grad_(True),
                                                     pool[3:].detach().clone().requires_grad_(True)),
            rtol=1e-4,
        )


def test_byol_gradcheck():
    rng = np.random.default_rng(7)
    for _ in range(100):
        z = [_t(v).requires_grad_(True) for v in random_unit(rng, 2, 4)]
        rotated = _t(random_unit(rng, 3, 4)).requires_grad_(True)
        assert torch.autograd.gradcheck(byol_loss, tuple(z), rtol=1e-4)
        assert torch.autograd.gradcheck(
            lambda a, b, r: pnda_byol_loss(a, b, rotated_pos=r), (*z, rotated), rtol=1e-4
        )
        assert torch.autograd.gradcheck(
            lambda a, b, r: pnda_byol_loss(a, b, rotated_neg=r, alpha=0.05), (*z, rotated), rtol=1e-4
        )
