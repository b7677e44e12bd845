"""Positive and negative index sets of each anchor over a shared embedding pool."""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..rotation.types import EXTRA_ROTATIONS, Rotation
from .roles import AugMode, RotationRole, resolve_role

logger = logging.getLogger(__name__)

NUM_EXTRA_ROTATIONS = len(EXTRA_ROTATIONS)


class PairSpec(BaseModel):
    """Anchor index with its positive set P and negative set N.

    Index tuples are stored sorted so equal sets compare equal.
    """
    model_config = ConfigDict(frozen=True)

    anchor_index: int = Field(ge=0)
    positives: Tuple[int, ...]
    negatives: Tuple[int, ...] = ()

    @field_validator("positives", "negatives")
    @classmethod
    def canonical(cls, v):
        if len(set(v)) != len(v):
            raise ValueError(f"index set has duplicates: {v}")
        if any(i < 0 for i in v):
            raise ValueError(f"indices must be non-negative: {v}")
        return tuple(sorted(v))

    @model_validator(mode="after")
    def check_sets(self):
        if not self.positives:
            raise ValueError("a PairSpec needs at least one positive")
        if self.anchor_index in self.positives or self.anchor_index in self.negatives:
            raise ValueError(f"anchor {self.anchor_index} must not be in P or N")
        if set(self.positives) & set(self.negatives):
            raise ValueError("P and N must be disjoint")
        return self


def pair_masks(specs: Sequence[PairSpec], pool_size: int,
               device: Optional[torch.device] = None) -> Tuple[torch.Tensor, torch.Tensor]:
    """Boolean A x pool_size masks of positives and negatives, one row per spec."""
    pos = torch.zeros(len(specs), pool_size, dtype=torch.bool, device=device)
    neg = torch.zeros(len(specs), pool_size, dtype=torch.bool, device=device)
    for row, spec in enumerate(specs):
        top = max(spec.positives + spec.negatives + (spec.anchor_index,))
        if top >= pool_size:
            raise IndexError(f"PairSpec index {top} outside pool of {pool_size}")
        pos[row, list(spec.positives)] = True
        if spec.negatives:
            neg[row, list(spec.negatives)] = True
    return pos, neg


def draw_rotation_pair(rng: np.random.Generator) -> Tuple[Rotation, Rotation]:
    """Two distinct non-identity rotations, drawn without replacement."""
    first, second = rng.choice(len(EXTRA_ROTATIONS), size=2, replace=False)
    return EXTRA_ROTATIONS[int(first)], EXTRA_ROTATIONS[int(second)]


def _check_thetas(theta1: Rotation, theta2: Rotation) -> None:
    theta1, theta2 = Rotation(theta1), Rotation(theta2)
    if theta1 not in EXTRA_ROTATIONS or theta2 not in EXTRA_ROTATIONS:
        raise ValueError(f"rotated views need angles in {{90, 180, 270}}, got {theta1.value}, {theta2.value}")
    if theta1 == theta2:
        raise ValueError(f"the two rotated views need different angles, got {theta1.value} twice")


def simclr_pool_size(batch_size: int, role_uses_rotations: bool = True) -> int:
    """Rows of the SimCLR pool: 4M with rotated views, 2M without."""
    return (4 if role_uses_rotations else 2) * batch_size


def build_sets_simclr_for_role(batch_size: int, anchor: int, role: RotationRole) -> PairSpec:
    """SimCLR sets for anchor view ``anchor`` given its rotation role.

    Pool layout with rotations is ``[X | X+ | Rot(X, t1) | Rot(X+, t2)]``
    (4M rows); without rotations it is ``[X | X+]``. Anchors are rows
    0..2M-1.
    """
    m = batch_size
    if m < 2:
        raise ValueError(f"SimCLR needs a batch of at least 2 images, got {m}")
    if not 0 <= anchor < 2 * m:
        raise ValueError(f"anchor index {anchor} outside the 2M={2 * m} anchor views")
    image = anchor % m
    partner = anchor + m if anchor < m else anchor - m
    own_rotations = {2 * m + image, 3 * m + image}

    role = RotationRole(role)
    size = simclr_pool_size(m, role is not RotationRole.NONE)
    others = [j for j in range(size) if j not in (anchor, partner)]

    if role is RotationRole.POSITIVE:
        positives = [partner, *sorted(own_rotations)]
        negatives = [j for j in others if j not in own_rotations]
    elif role is RotationRole.IGNORE:
        positives = [partner]
        negatives = [j for j in others if j not in own_rotations]
    else:
        positives = [partner]
        negatives = others
    return PairSpec(anchor_index=anchor, positives=tuple(positives), negatives=tuple(negatives))


def build_sets_simclr(batch_size: int, anchor: int, is_rai: Optional[bool],
                      theta1: Rotation = Rotation.R90, theta2: Rotation = Rotation.R180,
                      mode: AugMode = AugMode.PNDA) -> PairSpec:
    """SimCLR positive and negative sets of one anchor view.

    RAI: P = {x+, Rot(x, t1), Rot(x+, t2)} and N = the other 4(M-1) views.
    Non-RAI: P = {x+} and N = the other 4M-2 views, the anchor's own
    rotations included.
    """
    role = resolve_role(mode, is_rai)
    if role is not RotationRole.NONE:
        _check_thetas(theta1, theta2)
    return build_sets_simclr_for_role(batch_size, anchor, role)


def simclr_batch_specs(verdicts: Sequence[Optional[bool]], mode: AugMode,
                       theta1: Rotation = Rotation.R90, theta2: Rotation = Rotation.R180) -> List[PairSpec]:
    """Specs for all 2M anchors of a SimCLR step; ``verdicts[b]`` belongs to image b."""
    m = len(verdicts)
    return [
        build_sets_simclr(m, anchor, verdicts[anchor % m], theta1, theta2, mode)
        for anchor in range(2 * m)
    ]


class MocoLayout(BaseModel):
    """Index layout of a MoCo pool ``[queries | keys | rotated keys | queue]``.

    Rotated keys of query b sit at ``2B + 3b + j``; they are per-anchor
    extras and never enter the queue.
    """
    model_config = ConfigDict(frozen=True)

    batch_size: int = Field(ge=1)
    queue_size: int = Field(ge=0)
    with_rotations: bool = True

    @property
    def rotated_offset(self) -> int:
        return 2 * self.batch_size

    @property
    def queue_offset(self) -> int:
        extra = NUM_EXTRA_ROTATIONS * self.batch_size if self.with_rotations else 0
        return 2 * self.batch_size + extra

    @property
    def size(self) -> int:
        return self.queue_offset + self.queue_size

    def query(self, b: int) -> int:
        return b

    def key(self, b: int) -> int:
        return self.batch_size + b

    def rotated_keys(self, b: int) -> Tuple[int, ...]:
        if not self.with_rotations:
            raise ValueError("this MoCo pool holds no rotated keys")
        start = self.rotated_offset + NUM_EXTRA_ROTATIONS * b
        return tuple(range(start, start + NUM_EXTRA_ROTATIONS))

    def queue(self) -> Tuple[int, ...]:
        return tuple(range(self.queue_offset, self.size))


def build_sets_moco_for_role(anchor: int, layout: MocoLayout, role: RotationRole) -> PairSpec:
    """MoCo v2 sets for query ``anchor``.

    RAI: P = {key and its three rotations}, N = queue.
    Non-RAI: P = {key}, N = queue plus the three rotated keys.
    """
    if layout.queue_size == 0:
        raise ValueError("MoCo sets need a non-empty queue")
    if not 0 <= anchor < layout.batch_size:
        raise ValueError(f"query index {anchor} outside batch of {layout.batch_size}")
    role = RotationRole(role)
    if role in (RotationRole.POSITIVE, RotationRole.NEGATIVE, RotationRole.IGNORE) and not layout.with_rotations:
        raise ValueError(f"role {role.value} needs rotated keys but the pool has none")

    positives = [layout.key(anchor)]
    negatives = list(layout.queue())
    if role is RotationRole.POSITIVE:
        positives += layout.rotated_keys(anchor)
    elif role is RotationRole.NEGATIVE:
        negatives += layout.rotated_keys(anchor)
    return PairSpec(anchor_index=layout.query(anchor), positives=tuple(positives), negatives=tuple(negatives))


def build_sets_moco(anchor: int, layout: MocoLayout, is_rai: Optional[bool],
                    mode: AugMode = AugMode.PNDA) -> PairSpec:
    return build_sets_moco_for_role(anchor, layout, resolve_role(mode, is_rai))


def build_pool_moco(queries: torch.Tensor, keys: torch.Tensor, rotated_keys: Optional[torch.Tensor],
                    queue: torch.Tensor) -> Tuple[torch.Tensor, MocoLayout]:
    """Stack MoCo embeddings into one pool matching :class:`MocoLayout`.

    Args:
        queries: B x d
        keys: B x d
        rotated_keys: B x 3 x d, or None for the rotation-free layout
        queue: K x d

    Returns:
        Tuple of the pool tensor and its layout
    """
    if queries.shape != keys.shape:
        raise ValueError(f"queries {tuple(queries.shape)} and keys {tuple(keys.shape)} differ")
    if queue.shape[0] == 0:
        raise ValueError("MoCo sets need a non-empty queue")
    b, d = queries.shape
    parts = [queries, keys]
    if rotated_keys is not None:
        if rotated_keys.shape != (b, NUM_EXTRA_ROTATIONS, d):
            raise ValueError(f"rotated keys must be {b} x 3 x {d}, got {tuple(rotated_keys.shape)}")
        parts.append(rotated_keys.reshape(b * NUM_EXTRA_ROTATIONS, d))
    parts.append(queue)
    layout = MocoLayout(batch_size=b, queue_size=queue.shape[0], with_rotations=rotated_keys is not None)
    return torch.cat(parts, dim=0), layout


def moco_batch_specs(verdicts: Sequence[Optional[bool]], mode: AugMode, queue_size: int) -> List[PairSpec]:
    """Specs for all B queries of a MoCo step."""
    mode = AugMode(mode)
    layout = MocoLayout(batch_size=len(verdicts), queue_size=queue_size, with_rotations=mode.uses_rotations)
    return [build_sets_moco(b, layout, verdicts[b], mode) for b in range(len(verdicts))]


def simclr_role_masks(roles: Sequence[RotationRole],
                      device: Optional[torch.device] = None) -> Tuple[torch.Tensor, torch.Tensor]:
    """Vectorized :func:`pair_masks` of the SimCLR specs, from per-image roles.

    Rows are the 2M anchor views, columns the 4M pool rows (2M when no role
    uses rotated views).
    """
    m = len(roles)
    if m < 2:
        raise ValueError(f"SimCLR needs a batch of at least 2 images, got {m}")
    with_rotations = any(r is not RotationRole.NONE for r in roles)
    size = simclr_pool_size(m, with_rotations)
    anchors = torch.arange(2 * m, device=device)
    image = anchors % m
    partner = torch.where(anchors < m, anchors + m, anchors - m)

    pos = torch.zeros(2 * m, size, dtype=torch.bool, device=device)
    pos[anchors, partner] = True
    excluded = pos.clone()
    excluded[anchors, anchors] = True
    if with_rotations:
        role_of_anchor = [RotationRole(roles[int(i)]) for i in image]
        positive = torch.as_tensor([r is RotationRole.POSITIVE for r in role_of_anchor], device=device)
        drop = torch.as_tensor(
            [r in (RotationRole.POSITIVE, RotationRole.IGNORE) for r in role_of_anchor], device=device
        )
        for block in (2 * m, 3 * m):
            pos[anchors[positive], block + image[positive]] = True
            excluded[anchors[drop], block + image[drop]] = True
    neg = ~excluded
    return pos, neg


def moco_block_masks(roles: Sequence[RotationRole], queue_size: int, with_rotations: bool,
                     device: Optional[torch.device] = None) -> Tuple[torch.Tensor, torch.Tensor]:
    """Masks over the per-query logit columns ``[key | 3 rotated keys | queue]``.

    Columns outside P and N of a query (other queries, other keys) never
    enter its term, so only these blocks are materialized.
    """
    if queue_size == 0:
        raise ValueError("MoCo sets need a non-empty queue")
    b = len(roles)
    n_rot = NUM_EXTRA_ROTATIONS if with_rotations else 0
    pos = torch.zeros(b, 1 + n_rot + queue_size, dtype=torch.bool, device=device)
    neg = torch.zeros_like(pos)
    pos[:, 0] = True
    neg[:, 1 + n_rot:] = True
    for row, role in enumerate(roles):
        role = RotationRole(role)
        if role is RotationRole.NONE:
            continue
        if not with_rotations:
            raise ValueError(f"role {role.value} needs rotated keys but the pool has none")
        if role is RotationRole.POSITIVE:
            pos[row, 1:1 + n_rot] = True
        elif role is RotationRole.NEGATIVE:
            neg[row, 1:1 + n_rot] = True
    return pos, neg
