"""Contrastive objectives and positive/negative set construction."""
from .losses import (
    EmbeddingBatch, byol_loss, check_unit_norm, info_nce, l2_normalize, masked_multi_positive_nce,
    pnda_byol_batch, pnda_byol_loss, pnda_info_nce, pnda_info_nce_batch,
)
from .pair_sets import (
    MocoLayout, PairSpec, build_pool_moco, build_sets_moco, build_sets_moco_for_role,
    build_sets_simclr, build_sets_simclr_for_role, draw_rotation_pair, moco_batch_specs,
    moco_block_masks, pair_masks, simclr_batch_specs, simclr_pool_size, simclr_role_masks,
)
from .roles import AugMode, Framework, RotationRole, resolve_role

__all__ = [
    "EmbeddingBatch", "byol_loss", "check_unit_norm", "info_nce", "l2_normalize",
    "masked_multi_positive_nce", "pnda_byol_batch", "pnda_byol_loss", "pnda_info_nce",
    "pnda_info_nce_batch", "MocoLayout", "PairSpec", "build_pool_moco", "build_sets_moco",
    "build_sets_moco_for_role", "build_sets_simclr", "build_sets_simclr_for_role",
    "draw_rotation_pair", "moco_batch_specs", "moco_block_masks", "pair_masks",
    "simclr_batch_specs", "simclr_role_masks",
    "simclr_pool_size", "AugMode", "Framework", "RotationRole", "resolve_role",
]
