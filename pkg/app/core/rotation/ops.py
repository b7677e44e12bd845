"""Lossless 90-degree rotations of images and batches."""
from typing import List, Sequence, Tuple

import numpy as np
import torch

from ..errors import ShapeError
from .types import ALL_ROTATIONS, ImageSample, Rotation


def rotate_pixels(pixels: np.ndarray, r: Rotation) -> np.ndarray:
    """Rotate an H x W x C array counter-clockwise by ``r``.

    Pure index permutation: four quarter turns reproduce the input bit for bit.
    """
    pixels = np.asarray(pixels)
    if pixels.ndim < 2 or pixels.shape[0] != pixels.shape[1]:
        raise ShapeError(f"rotation needs a square image, got shape {pixels.shape}")
    return np.ascontiguousarray(np.rot90(pixels, k=Rotation(r).label, axes=(0, 1)))


def rotate(img: ImageSample, r: Rotation) -> ImageSample:
    """Return ``img`` rotated by ``r``; the id is kept and the rotation tag composed."""
    r = Rotation(r)
    return img.model_copy(update={
        "pixels": rotate_pixels(img.pixels, r),
        "rotation": img.rotation.compose(r),
    })


def expand_with_rotations(batch: Sequence[ImageSample]) -> List[Tuple[ImageSample, Rotation]]:
    """Label every image of ``batch`` under all four rotations.

    Output order is sample-major, rotation-minor: index ``4*i + k`` holds
    image ``i`` rotated by ``90*k`` degrees.
    """
    if len(batch) == 0:
        raise ValueError("expand_with_rotations needs a non-empty batch")
    return [(rotate(img, r), r) for img in batch for r in ALL_ROTATIONS]


def rotate_tensor(x: torch.Tensor, r: Rotation) -> torch.Tensor:
    """Rotate an N x C x H x W tensor counter-clockwise by ``r``."""
    if x.shape[-1] != x.shape[-2]:
        raise ShapeError(f"rotation needs square images, got {tuple(x.shape[-2:])}")
    return torch.rot90(x, k=Rotation(r).label, dims=(-2, -1))


def expand_tensor_with_rotations(x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Tensor form of :func:`expand_with_rotations`.

    Args:
        x: Batch of shape B x C x H x W

    Returns:
        Tuple of the 4B x C x H x W rotated batch (sample-major) and the
        4B rotation class labels
    """
    if x.shape[0] == 0:
        raise ValueError("expand_tensor_with_rotations needs a non-empty batch")
    rotated = torch.stack([rotate_tensor(x, r) for r in ALL_ROTATIONS], dim=1)
    labels = torch.arange(4, device=x.device).repeat(x.shape[0])
    return rotated.reshape(-1, *x.shape[1:]), labels
