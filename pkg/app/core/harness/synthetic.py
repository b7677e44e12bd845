"""Synthetic corpus of rotation-symmetric and oriented images with ground truth."""
import logging
from typing import List

import numpy as np

from ..config.base_config import SyntheticCorpusSpec
from ..rotation.types import ImageSample, Verdict

logger = logging.getLogger(__name__)

# class label per pattern family
RINGS, SYMMETRIC_NOISE, GRADIENT, ARROW = 0, 1, 2, 3
FAMILY_NAMES = {RINGS: "rings", SYMMETRIC_NOISE: "symmetric_noise", GRADIENT: "gradient", ARROW: "arrow"}
RAI_FAMILIES = (RINGS, SYMMETRIC_NOISE)

# patterns live in [LOW, HIGH] so additive noise is rarely clipped
LOW, HIGH = 0.1, 0.9


def _grid(size: int):
    coords = np.arange(size, dtype=np.float64)
    return np.meshgrid(coords, coords, indexing="ij")


def _rings(size: int, rng: np.random.Generator) -> np.ndarray:
    """Concentric rings around the exact image center; invariant under quarter turns."""
    rows, cols = _grid(size)
    center = (size - 1) / 2
    radius = np.sqrt((rows - center) ** 2 + (cols - center) ** 2)
    period = rng.uniform(size / 8, size / 3)
    phase = rng.uniform(0, 2 * np.pi)
    return 0.5 + 0.5 * np.cos(2 * np.pi * radius / period + phase)


def _symmetric_noise(size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform noise averaged over its four rotations."""
    base = rng.uniform(0, 1, size=(size, size))
    half_turn = base + np.rot90(base, 2)
    sym = (half_turn + np.rot90(half_turn, 1)) / 4
    return (sym - sym.min()) / max(sym.max() - sym.min(), 1e-12)


def _gradient(size: int, rng: np.random.Generator) -> np.ndarray:
    """Vertical luminance ramp, bright at the top."""
    rows, _ = _grid(size)
    steepness = rng.uniform(0.7, 1.0)
    return 1.0 - steepness * rows / (size - 1)


def _arrow(size: int, rng: np.random.Generator) -> np.ndarray:
    """Upward arrow glyph: wide triangular head in the top half, thin shaft below."""
    rows, cols = _grid(size)
    center = (size - 1) / 2
    head_top = size * rng.uniform(0.05, 0.12)
    head_bottom = size * 0.5
    half_width = size * rng.uniform(0.32, 0.4)
    shaft_half = size * rng.uniform(0.06, 0.09)

    depth = (rows - head_top) / (head_bottom - head_top)
    head = (depth >= 0) & (depth <= 1) & (np.abs(cols - center) <= depth * half_width)
    shaft = (rows > head_bottom) & (rows <= size * 0.9) & (np.abs(cols - center) <= shaft_half)
    return (head | shaft).astype(np.float64)


_PATTERNS = {RINGS: _rings, SYMMETRIC_NOISE: _symmetric_noise, GRADIENT: _gradient, ARROW: _arrow}


def _render(family: int, spec: SyntheticCorpusSpec, rng: np.random.Generator) -> np.ndarray:
    pattern = _PATTERNS[family](spec.image_size, rng)
    tint = rng.uniform(0.6, 1.0, size=spec.channels)
    image = LOW + (HIGH - LOW) * pattern[:, :, None] * tint[None, None, :]
    if spec.noise_sigma > 0:
        noise = rng.normal(0.0, spec.noise_sigma, size=image.shape)
        if family in RAI_FAMILIES:
            # paired sums keep the quarter-turn average bit-exact under rotation
            half_turn = noise + np.rot90(noise, 2, axes=(0, 1))
            noise = (half_turn + np.rot90(half_turn, 1, axes=(0, 1))) / 2
        image = image + noise
    return np.clip(image, 0.0, 1.0)


def generate_synthetic_corpus(spec: SyntheticCorpusSpec) -> List[ImageSample]:
    """Generate ``n_rai`` symmetric and ``n_nonrai`` oriented images.

    Rotation-agnostic images alternate between rings and symmetrized noise,
    oriented images between gradients and arrows. Each image carries its
    ground-truth verdict and its family as class label. Identical specs
    produce identical corpora.
    """
    rng = np.random.default_rng(spec.seed)
    families = (
        [RINGS if i % 2 == 0 else SYMMETRIC_NOISE for i in range(spec.n_rai)]
        + [GRADIENT if i % 2 == 0 else ARROW for i in range(spec.n_nonrai)]
    )
    corpus = []
    for index, family in enumerate(families):
        truth = Verdict.RAI if family in RAI_FAMILIES else Verdict.NON_RAI
        corpus.append(ImageSample(
            id=f"syn-{index:06d}",
            pixels=_render(family, spec, rng),
            truth=truth,
            label=family,
        ))
    logger.info(f"Generated synthetic corpus: {spec.n_rai} RAI, {spec.n_nonrai} non-RAI, {spec.image_size}px")
    return corpus
