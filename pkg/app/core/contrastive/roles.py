"""Augmentation modes and the per-anchor role of rotated views."""
from enum import Enum
from typing import Optional


class Framework(str, Enum):
    """Contrastive learning frameworks the harness can train."""
    SIMCLR = "simclr"
    MOCO_V2 = "moco_v2"
    BYOL = "byol"


class AugMode(str, Enum):
    """How rotated views enter the contrastive objective."""
    NONE = "none"
    PDA = "pda"
    NDA = "nda"
    PNDA = "pnda"
    # ablation: rotations positive for RAI, unused for non-RAI
    POSITIVE_ONLY = "positive_only"

    @property
    def uses_rotations(self) -> bool:
        return self is not AugMode.NONE

    @property
    def needs_partition(self) -> bool:
        return self in (AugMode.PNDA, AugMode.POSITIVE_ONLY)


class RotationRole(str, Enum):
    """What an anchor's own rotated views are in its contrastive term."""
    NONE = "none"          # no rotated views exist in the pool
    POSITIVE = "positive"
    NEGATIVE = "negative"
    IGNORE = "ignore"      # rotated views present but excluded from P and N


def resolve_role(mode: AugMode, is_rai: Optional[bool] = None) -> RotationRole:
    """Map an augmentation mode and an image verdict to a rotation role.

    Args:
        mode: Augmentation mode of the run
        is_rai: Partition verdict of the anchor's source image; only read
            by the partition-driven modes

    Returns:
        RotationRole for the anchor
    """
    mode = AugMode(mode)
    if mode is AugMode.NONE:
        return RotationRole.NONE
    if mode is AugMode.PDA:
        return RotationRole.POSITIVE
    if mode is AugMode.NDA:
        return RotationRole.NEGATIVE
    if is_rai is None:
        raise ValueError(f"Mode {mode.value} requires an RAI verdict for every anchor")
    if mode is AugMode.PNDA:
        return RotationRole.POSITIVE if is_rai else RotationRole.NEGATIVE
    return RotationRole.POSITIVE if is_rai else RotationRole.IGNORE
