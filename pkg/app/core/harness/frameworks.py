"""SimCLR, MoCo v2 and BYOL training objectives with rotated views."""
import copy
import logging
from typing import List, Optional

import numpy as np
import torch
import torch.nn as nn

from ..config.experiment_config import ExperimentConfig
from ..contrastive.losses import l2_normalize, masked_multi_positive_nce, pnda_byol_batch
from ..contrastive.pair_sets import (
    PairSpec, draw_rotation_pair, moco_batch_specs, moco_block_masks, simclr_batch_specs,
    simclr_role_masks,
)
from ..contrastive.roles import Framework, RotationRole
from ..interfaces.framework import IContrastiveFramework
from ..models.encoders import MLPHead, build_encoder
from ..rotation.ops import rotate_tensor
from ..rotation.types import EXTRA_ROTATIONS, Rotation
from .ema import init_target, momentum_update
from .queue import EmbeddingQueue

logger = logging.getLogger(__name__)


def _rotated_views(x: torch.Tensor) -> torch.Tensor:
    """B x C x H x W -> (3B) x C x H x W, rotation-minor: row 3b + j is image b at 90(j+1) degrees."""
    stacked = torch.stack([rotate_tensor(x, r) for r in EXTRA_ROTATIONS], dim=1)
    return stacked.reshape(-1, *x.shape[1:])


class SimCLR(IContrastiveFramework):
    """SimCLR with rotated copies of both views in the pool.

    Pool layout is ``[X | X+ | Rot(X, t1) | Rot(X+, t2)]``; t1 and t2 are
    redrawn each step.
    """

    def __init__(self, cfg: ExperimentConfig, backbone: Optional[nn.Module] = None):
        super().__init__(cfg.mode)
        self.cfg = cfg
        self.tau = cfg.effective_tau
        self.backbone = backbone if backbone is not None else build_encoder(cfg.encoder)
        self.projector = MLPHead(self.backbone.out_dim, cfg.hidden_dim, cfg.projection_dim)
        self._rng = np.random.default_rng(cfg.seed)
        self.thetas = (Rotation.R90, Rotation.R180)

    @property
    def encoder(self) -> nn.Module:
        return self.backbone

    def embed(self, x: torch.Tensor) -> torch.Tensor:
        return l2_normalize(self.projector(self.backbone(x)))

    def compute_loss(self, view1, view2, verdicts):
        roles = self.roles(verdicts)
        views = [view1, view2]
        if self.mode.uses_rotations:
            self.thetas = draw_rotation_pair(self._rng)
            views += [rotate_tensor(view1, self.thetas[0]), rotate_tensor(view2, self.thetas[1])]
        pool = self.embed(torch.cat(views, dim=0))
        m = view1.shape[0]
        pos, neg = simclr_role_masks(roles, device=pool.device)
        logits = pool[:2 * m] @ pool.T / self.tau
        return masked_multi_positive_nce(logits, pos, neg).mean()

    def batch_specs(self, verdicts) -> List[PairSpec]:
        return simclr_batch_specs(verdicts, self.mode, *self.thetas)


class MoCoV2(IContrastiveFramework):
    """MoCo v2 with a momentum key encoder and a FIFO queue of negatives.

    Rotated keys are extra columns of their own query only; they are never
    enqueued.
    """

    def __init__(self, cfg: ExperimentConfig, backbone: Optional[nn.Module] = None):
        super().__init__(cfg.mode)
        self.cfg = cfg
        self.tau = cfg.effective_tau
        self.momentum = cfg.ema_momentum
        self.backbone = backbone if backbone is not None else build_encoder(cfg.encoder)
        self.projector = MLPHead(self.backbone.out_dim, cfg.hidden_dim, cfg.projection_dim)
        self.key_backbone = init_target(self.backbone, copy.deepcopy(self.backbone))
        self.key_projector = init_target(self.projector, copy.deepcopy(self.projector))
        self.queue = EmbeddingQueue(cfg.queue_size, cfg.projection_dim)
        self._pending_keys: Optional[torch.Tensor] = None

    @property
    def encoder(self) -> nn.Module:
        return self.backbone

    def embed_query(self, x: torch.Tensor) -> torch.Tensor:
        return l2_normalize(self.projector(self.backbone(x)))

    @torch.no_grad()
    def embed_key(self, x: torch.Tensor) -> torch.Tensor:
        return l2_normalize(self.key_projector(self.key_backbone(x)))

    @torch.no_grad()
    def warm_fill(self, view: torch.Tensor) -> None:
        """Enqueue keys of ``view`` without computing a loss."""
        self.queue.enqueue(self.embed_key(view))

    def compute_loss(self, view1, view2, verdicts):
        if len(self.queue) == 0:
            raise ValueError("MoCo queue is empty; warm-fill it before training")
        roles = self.roles(verdicts)
        q = self.embed_query(view1)
        k = self.embed_key(view2)
        columns = [(q * k).sum(dim=1, keepdim=True)]
        if self.mode.uses_rotations:
            b = view2.shape[0]
            rotated = self.embed_key(_rotated_views(view2)).reshape(b, len(EXTRA_ROTATIONS), -1)
            columns.append(torch.einsum("bd,bjd->bj", q, rotated))
        queue = self.queue.contents().to(q.device)
        columns.append(q @ queue.T)
        logits = torch.cat(columns, dim=1) / self.tau
        pos, neg = moco_block_masks(roles, queue.shape[0], self.mode.uses_rotations, device=q.device)
        self._pending_keys = k
        return masked_multi_positive_nce(logits, pos, neg).mean()

    def on_after_step(self) -> None:
        momentum_update(self.backbone, self.key_backbone, self.momentum)
        momentum_update(self.projector, self.key_projector, self.momentum)
        if self._pending_keys is not None:
            self.queue.enqueue(self._pending_keys)
            self._pending_keys = None

    def batch_specs(self, verdicts) -> List[PairSpec]:
        return moco_batch_specs(verdicts, self.mode, len(self.queue))


class BYOL(IContrastiveFramework):
    """BYOL with rotated target views pulled in or pushed away per image.

    The loss is not symmetrized: the online branch sees the first view, the
    target branch the second view and its rotations.
    """

    def __init__(self, cfg: ExperimentConfig, backbone: Optional[nn.Module] = None):
        super().__init__(cfg.mode)
        self.cfg = cfg
        self.alpha = cfg.alpha
        self.momentum = cfg.ema_momentum
        self.backbone = backbone if backbone is not None else build_encoder(cfg.encoder)
        self.projector = MLPHead(self.backbone.out_dim, cfg.hidden_dim, cfg.projection_dim)
        self.predictor = MLPHead(cfg.projection_dim, cfg.hidden_dim, cfg.projection_dim)
        self.target_backbone = init_target(self.backbone, copy.deepcopy(self.backbone))
        self.target_projector = init_target(self.projector, copy.deepcopy(self.projector))

    @property
    def encoder(self) -> nn.Module:
        return self.backbone

    def online(self, x: torch.Tensor) -> torch.Tensor:
        return l2_normalize(self.predictor(self.projector(self.backbone(x))))

    @torch.no_grad()
    def target(self, x: torch.Tensor) -> torch.Tensor:
        return l2_normalize(self.target_projector(self.target_backbone(x)))

    def compute_loss(self, view1, view2, verdicts):
        roles = self.roles(verdicts)
        p = self.online(view1)
        z = self.target(view2)
        rotated = None
        if any(r in (RotationRole.POSITIVE, RotationRole.NEGATIVE) for r in roles):
            b = view2.shape[0]
            rotated = self.target(_rotated_views(view2)).reshape(b, len(EXTRA_ROTATIONS), -1)
        return pnda_byol_batch(p, z, rotated, roles, self.alpha).mean()

    def on_after_step(self) -> None:
        momentum_update(self.backbone, self.target_backbone, self.momentum)
        momentum_update(self.projector, self.target_projector, self.momentum)

    def batch_specs(self, verdicts) -> List[PairSpec]:
        # BYOL has no negatives; each online view pairs with its target view
        # and, for positive roles, the three rotated target views.
        roles = self.roles(verdicts)
        b = len(roles)
        specs = []
        for i, role in enumerate(roles):
            positives = [b + i]
            if role is RotationRole.POSITIVE:
                positives += [2 * b + 3 * i + j for j in range(len(EXTRA_ROTATIONS))]
            negatives = []
            if role is RotationRole.NEGATIVE:
                negatives = [2 * b + 3 * i + j for j in range(len(EXTRA_ROTATIONS))]
            specs.append(PairSpec(anchor_index=i, positives=tuple(positives), negatives=tuple(negatives)))
        return specs


FRAMEWORKS = {Framework.SIMCLR: SimCLR, Framework.MOCO_V2: MoCoV2, Framework.BYOL: BYOL}


def build_framework(cfg: ExperimentConfig, backbone: Optional[nn.Module] = None) -> IContrastiveFramework:
    """Instantiate the framework named in ``cfg``."""
    return FRAMEWORKS[Framework(cfg.framework)](cfg, backbone)
