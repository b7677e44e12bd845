"""View-generation pipeline built from the augmentation recipe."""
import logging
from typing import Optional, Sequence

from torchvision import transforms

from ..config.experiment_config import AugmentationStep, default_recipe

logger = logging.getLogger(__name__)


def build_step(step: AugmentationStep, image_size: int):
    """Torchvision transform for one recipe step; operates on C x H x W tensors."""
    if step.type == "random_crop":
        crop = transforms.RandomResizedCrop(size=image_size, scale=tuple(step.scale), antialias=True)
        return transforms.RandomApply([crop], p=step.p) if step.p < 1 else crop
    if step.type == "random_flip":
        flip = transforms.RandomHorizontalFlip(p=step.p) if step.horizontal else transforms.RandomVerticalFlip(p=step.p)
        return flip
    if step.type == "color_jitter":
        jitter = transforms.ColorJitter(
            brightness=step.brightness,
            contrast=step.contrast,
            saturation=step.saturation,
            hue=step.hue,
        )
        return transforms.RandomApply([jitter], p=step.p)
    if step.type == "grayscale":
        return transforms.RandomGrayscale(p=step.p)
    if step.type == "gaussian_blur":
        kernel = step.kernel_size if step.kernel_size % 2 else step.kernel_size + 1
        blur = transforms.GaussianBlur(kernel_size=kernel, sigma=tuple(step.sigma))
        return transforms.RandomApply([blur], p=step.p)
    raise ValueError(f"Unknown augmentation step: {step.type}")


def build_augmentation(recipe: Optional[Sequence[AugmentationStep]], image_size: int) -> transforms.Compose:
    """Compose the recipe into one random view transform.

    Args:
        recipe: Ordered steps; None uses crop, flip, color jitter and grayscale
        image_size: Output side length of the crop

    Returns:
        Callable mapping a C x H x W tensor in [0, 1] to an augmented view
    """
    recipe = default_recipe() if recipe is None else recipe
    pipeline = transforms.Compose([build_step(step, image_size) for step in recipe])
    logger.debug(f"Augmentation pipeline: {[step.type for step in recipe]}")
    return pipeline
