"""Domain types shared by every stage of the pipeline."""
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from ..errors import ShapeError


class Verdict(str, Enum):
    """Rotation-agnosticism of an image."""
    RAI = "RAI"
    NON_RAI = "NON_RAI"


class Rotation(int, Enum):
    """Counter-clockwise rotation by a multiple of 90 degrees."""
    R0 = 0
    R90 = 90
    R180 = 180
    R270 = 270

    @property
    def label(self) -> int:
        """Class index used by the rotation predictor (0..3)."""
        return self.value // 90

    @classmethod
    def from_label(cls, label: int) -> "Rotation":
        return cls(90 * (int(label) % 4))

    def compose(self, other: "Rotation") -> "Rotation":
        return Rotation((self.value + Rotation(other).value) % 360)


ALL_ROTATIONS: Tuple[Rotation, ...] = (Rotation.R0, Rotation.R90, Rotation.R180, Rotation.R270)
EXTRA_ROTATIONS: Tuple[Rotation, ...] = ALL_ROTATIONS[1:]


class ImageSample(BaseModel):
    """A square H x W x C image with values in [0, 1].

    ``truth`` and ``label`` are only known for synthetic corpora.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    id: str
    pixels: np.ndarray
    truth: Optional[Verdict] = None
    label: Optional[int] = None
    rotation: Rotation = Rotation.R0

    @field_validator("pixels")
    @classmethod
    def validate_pixels(cls, v):
        v = np.asarray(v)
        if v.ndim == 2:
            v = v[:, :, None]
        if v.ndim != 3:
            raise ShapeError(f"pixels must be H x W x C, got shape {v.shape}")
        if v.shape[0] != v.shape[1]:
            raise ShapeError(f"image must be square, got {v.shape[0]} x {v.shape[1]}")
        if not np.all(np.isfinite(v)):
            raise ValueError("pixels must be finite")
        if v.size and (v.min() < 0 or v.max() > 1):
            raise ValueError("pixel values must lie in [0, 1]")
        return v

    @property
    def size(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def channels(self) -> int:
        return int(self.pixels.shape[2])


class ProbVector(BaseModel):
    """Softmax output over the four rotation classes."""
    model_config = ConfigDict(frozen=True)

    p: Tuple[float, float, float, float]

    @field_validator("p")
    @classmethod
    def validate_distribution(cls, v):
        if any(not np.isfinite(x) or x < 0 for x in v):
            raise ValueError(f"probabilities must be finite and non-negative, got {v}")
        if abs(sum(v) - 1.0) > 1e-6:
            raise ValueError(f"probabilities must sum to 1 within 1e-6, got {sum(v)}")
        return v

    def as_array(self) -> np.ndarray:
        return np.asarray(self.p, dtype=np.float64)
