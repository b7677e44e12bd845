"""Rotation-prediction objectives of the two sampling steps.

All functions take softmax probabilities over the four rotation classes in
the last dimension. Batch objectives follow the printed normalisation: the
sum over the 4B rotation-expanded samples is divided by B, not 4B.
"""
import torch

from ..config.sampler_config import SamplerConfig
from ..rotation.entropy import PROB_FLOOR, batch_entropy

NUM_ROTATIONS = 4


def _check_batch(probs: torch.Tensor, labels: torch.Tensor) -> int:
    if probs.shape[:-1] != labels.shape:
        raise ValueError(
            f"predictions and labels differ in length: {tuple(probs.shape[:-1])} vs {tuple(labels.shape)}"
        )
    n = labels.numel()
    if n == 0 or n % NUM_ROTATIONS:
        raise ValueError(f"expected a rotation-expanded batch of 4B samples, got {n}")
    return n // NUM_ROTATIONS


def cross_entropy_terms(probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Per-sample ``-ln p[label]``."""
    log_p = probs.clamp_min(PROB_FLOOR).log()
    return -log_p.gather(-1, labels.long().unsqueeze(-1)).squeeze(-1)


def loss_crs(probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Step 1 rotation cross-entropy over a rotation-expanded batch."""
    batch_size = _check_batch(probs, labels)
    return cross_entropy_terms(probs, labels).sum() / batch_size


def loss_es(probs: torch.Tensor, rho: float, m: float) -> torch.Tensor:
    """Entropy separation: ``-|H(p) - rho|`` outside the margin, 0 inside.

    Elementwise over leading dimensions. The gate is evaluated without
    gradient.
    """
    deviation = (batch_entropy(probs) - rho).abs()
    outside = deviation.detach() > m
    return torch.where(outside, -deviation, torch.zeros_like(deviation))


def loss_crs_filtered(probs: torch.Tensor, labels: torch.Tensor, rho: float, m: float) -> torch.Tensor:
    """Cross-entropy restricted to confidently predicted (non-RAI) samples.

    Active only where ``H(p) - rho < -m``; elementwise, gate without gradient.
    """
    ce = cross_entropy_terms(probs, labels)
    active = (batch_entropy(probs).detach() - rho) < -m
    return torch.where(active, ce, torch.zeros_like(ce))


def separation_weight(epoch: int, cfg: SamplerConfig) -> float:
    """lambda = lambda' * epoch / beta2, with 1-based epochs."""
    if not 1 <= epoch <= cfg.beta2:
        raise ValueError(f"epoch must lie in [1, {cfg.beta2}], got {epoch}")
    return cfg.lambda_max * epoch / cfg.beta2


def step2_objective(probs: torch.Tensor, labels: torch.Tensor, epoch: int,
                    cfg: SamplerConfig) -> torch.Tensor:
    """Filtered cross-entropy plus the ramped entropy separation term."""
    lam = separation_weight(epoch, cfg)
    batch_size = _check_batch(probs, labels)
    filtered = loss_crs_filtered(probs, labels, cfg.rho, cfg.margin).sum() / batch_size
    separation = loss_es(probs, cfg.rho, cfg.margin).sum() / batch_size
    return filtered + lam * separation
