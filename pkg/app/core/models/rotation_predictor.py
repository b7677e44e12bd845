from typing import Dict, Optional

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..config.base_config import EncoderConfig
from .encoders import build_encoder


class RotationPredictor(nn.Module):
    """Feature extractor G followed by a four-way rotation head F."""

    def __init__(self, encoder: nn.Module, num_rotations: int = 4):
        super().__init__()
        self.encoder = encoder
        self.head = nn.Linear(encoder.out_dim, num_rotations)
        # final rotation accuracy of each training step, e.g. {"step1": 0.91}
        self.rotation_accuracy: Dict[str, float] = {}

    @classmethod
    def from_config(cls, cfg: Optional[EncoderConfig] = None) -> "RotationPredictor":
        return cls(build_encoder(cfg or EncoderConfig()))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.encoder(x))

    def predict_proba(self, x: torch.Tensor) -> torch.Tensor:
        return F.softmax(self(x), dim=-1)
