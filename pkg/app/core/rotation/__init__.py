"""Image rotation group, domain types and entropy utilities."""
from .entropy import MAX_ENTROPY, batch_entropy, entropy
from .ops import (
    expand_tensor_with_rotations, expand_with_rotations, rotate, rotate_pixels, rotate_tensor,
)
from .types import ALL_ROTATIONS, EXTRA_ROTATIONS, ImageSample, ProbVector, Rotation, Verdict

__all__ = [
    "MAX_ENTROPY", "batch_entropy", "entropy", "expand_tensor_with_rotations",
    "expand_with_rotations", "rotate", "rotate_pixels", "rotate_tensor", "ALL_ROTATIONS",
    "EXTRA_ROTATIONS", "ImageSample", "ProbVector", "Rotation", "Verdict",
]
