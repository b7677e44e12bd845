"""InfoNCE and BYOL objectives, with their rotation-aware extensions.

Embeddings are expected L2-normalized; similarities are plain dot products.
"""
from typing import Optional, Sequence, Union

import torch
import torch.nn.functional as F

from ..errors import ShapeError
from .pair_sets import PairSpec, pair_masks
from .roles import RotationRole

UNIT_NORM_ATOL = 1e-5


def l2_normalize(z: torch.Tensor) -> torch.Tensor:
    return F.normalize(z, dim=-1)


def check_unit_norm(z: torch.Tensor, atol: float = UNIT_NORM_ATOL) -> None:
    """Raise when any row of ``z`` is not unit length within ``atol``."""
    norms = z.detach().norm(dim=-1)
    if not torch.allclose(norms, torch.ones_like(norms), atol=atol, rtol=0):
        worst = float((norms - 1).abs().max())
        raise ShapeError(f"embeddings must be L2-normalized; largest norm deviation {worst:.2e}")


def _check_tau(tau: float) -> None:
    if not tau > 0:
        raise ValueError(f"temperature must be positive, got {tau}")


def masked_multi_positive_nce(logits: torch.Tensor, pos_mask: torch.Tensor,
                              neg_mask: torch.Tensor) -> torch.Tensor:
    """Multi-positive InfoNCE per anchor row.

    Each row averages ``-log softmax`` over its positive columns, where the
    softmax runs over the union of positive and negative columns only.

    Args:
        logits: A x K similarities already divided by the temperature
        pos_mask: A x K boolean, at least one True per row
        neg_mask: A x K boolean, disjoint from ``pos_mask``

    Returns:
        Loss per anchor, shape A
    """
    if logits.shape != pos_mask.shape or logits.shape != neg_mask.shape:
        raise ShapeError(
            f"logits {tuple(logits.shape)} and masks {tuple(pos_mask.shape)}, "
            f"{tuple(neg_mask.shape)} differ in shape"
        )
    if bool((pos_mask & neg_mask).any()):
        raise ValueError("positive and negative masks overlap")
    n_pos = pos_mask.sum(dim=-1)
    if bool((n_pos == 0).any()):
        raise ValueError("every anchor needs at least one positive")
    support = pos_mask | neg_mask
    log_norm = torch.logsumexp(logits.masked_fill(~support, float("-inf")), dim=-1, keepdim=True)
    log_prob = logits - log_norm
    pos_log_prob = torch.where(pos_mask, log_prob, torch.zeros_like(log_prob)).sum(dim=-1)
    return -pos_log_prob / n_pos.to(logits.dtype)


def pnda_info_nce_batch(pool: torch.Tensor, specs: Sequence[PairSpec], tau: float) -> torch.Tensor:
    """Extended InfoNCE for many anchors over one shared embedding pool.

    Returns:
        Loss per spec, in spec order
    """
    _check_tau(tau)
    if len(specs) == 0:
        raise ValueError("pnda_info_nce_batch needs at least one PairSpec")
    anchors = torch.as_tensor([s.anchor_index for s in specs], device=pool.device)
    pos_mask, neg_mask = pair_masks(specs, pool.shape[0], device=pool.device)
    logits = pool[anchors] @ pool.T / tau
    return masked_multi_positive_nce(logits, pos_mask, neg_mask)


def pnda_info_nce(pool: Union[torch.Tensor, "EmbeddingBatch"], spec: PairSpec, tau: float) -> torch.Tensor:
    """Extended InfoNCE of one anchor with positive set P and negative set N.

    The normalizer ranges over P and N together, so every positive also
    appears in the denominator.
    """
    if isinstance(pool, EmbeddingBatch):
        pool = pool.pool
    return pnda_info_nce_batch(pool, [spec], tau)[0]


def info_nce(z_i: torch.Tensor, z_p: torch.Tensor, negatives: torch.Tensor, tau: float) -> torch.Tensor:
    """InfoNCE of anchor ``z_i`` with one positive and K negatives (K x d)."""
    _check_tau(tau)
    negatives = negatives.reshape(-1, z_i.shape[-1])
    if negatives.shape[0] == 0:
        raise ValueError("info_nce needs at least one negative")
    pool = torch.cat([z_i.reshape(1, -1), z_p.reshape(1, -1), negatives], dim=0)
    spec = PairSpec(anchor_index=0, positives=(1,), negatives=tuple(range(2, pool.shape[0])))
    return pnda_info_nce_batch(pool, [spec], tau)[0]


def byol_loss(z_i: torch.Tensor, z_p: torch.Tensor) -> torch.Tensor:
    """Squared distance of normalized vectors, ``2 - 2 z_i . z_p`` on the unit sphere."""
    return (z_i - z_p).pow(2).sum(dim=-1)


def pnda_byol_loss(z_i: torch.Tensor, z_p: torch.Tensor,
                   rotated_pos: Optional[torch.Tensor] = None,
                   rotated_neg: Optional[torch.Tensor] = None,
                   alpha: float = 0.05) -> torch.Tensor:
    """BYOL loss with rotated target views pulled in (RAI) or pushed away (non-RAI).

    Args:
        z_i: Online prediction, shape d (or B x d)
        z_p: Target projection of the other view
        rotated_pos: k x d rotated target views treated as positives
        rotated_neg: k x d rotated target views treated as negatives
        alpha: Penalty weight of the negative term

    Returns:
        Loss value; an empty set contributes nothing
    """
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    has_pos = rotated_pos is not None and rotated_pos.shape[-2] > 0
    has_neg = rotated_neg is not None and rotated_neg.shape[-2] > 0
    if has_pos and has_neg:
        raise ValueError("rotated views are either positives or negatives, not both")
    loss = byol_loss(z_i, z_p)
    if has_pos:
        loss = loss + byol_loss(z_i.unsqueeze(-2), rotated_pos).mean(dim=-1)
    if has_neg:
        loss = loss - alpha * byol_loss(z_i.unsqueeze(-2), rotated_neg).mean(dim=-1)
    return loss


def pnda_byol_batch(z_online: torch.Tensor, z_target: torch.Tensor,
                    z_rotated: Optional[torch.Tensor], roles: Sequence[RotationRole],
                    alpha: float = 0.05) -> torch.Tensor:
    """Per-sample extended BYOL loss where each row's role decides the rotated term.

    Args:
        z_online: B x d online predictions
        z_target: B x d target projections of the other view
        z_rotated: B x k x d rotated target views, or None when no role uses them
        roles: One RotationRole per row
        alpha: Penalty weight of the negative term

    Returns:
        Loss per row, shape B
    """
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if len(roles) != z_online.shape[0]:
        raise ShapeError(f"{len(roles)} roles for {z_online.shape[0]} embeddings")
    loss = byol_loss(z_online, z_target)
    uses_rotations = any(r in (RotationRole.POSITIVE, RotationRole.NEGATIVE) for r in roles)
    if not uses_rotations:
        return loss
    if z_rotated is None:
        raise ValueError("rotated views are required when a role is POSITIVE or NEGATIVE")
    weight = torch.as_tensor(
        [1.0 if r is RotationRole.POSITIVE else -alpha if r is RotationRole.NEGATIVE else 0.0 for r in roles],
        dtype=z_online.dtype, device=z_online.device,
    )
    rotated_term = byol_loss(z_online.unsqueeze(1), z_rotated).mean(dim=-1)
    return loss + weight * rotated_term


class EmbeddingBatch:
    """Pool of L2-normalized embeddings shared by the anchors of one step."""

    def __init__(self, pool: torch.Tensor, atol: float = UNIT_NORM_ATOL):
        if pool.dim() != 2:
            raise ShapeError(f"embedding pool must be N x d, got {tuple(pool.shape)}")
        check_unit_norm(pool, atol)
        self.pool = pool

    @classmethod
    def from_raw(cls, z: torch.Tensor) -> "EmbeddingBatch":
        return cls(l2_normalize(z))

    def __len__(self) -> int:
        return self.pool.shape[0]
