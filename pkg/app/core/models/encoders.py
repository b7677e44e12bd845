"""Feature extractors and MLP heads."""
import logging
from typing import List

import torch
import torch.nn as nn
from torchvision import models

from ..config.base_config import EncoderConfig

logger = logging.getLogger(__name__)


class ConvEncoder(nn.Module):
    """Stride-2 conv blocks followed by global average pooling."""

    def __init__(self, in_channels: int = 3, channels: List[int] = (32, 64, 128, 128)):
        super().__init__()
        layers = []
        width = in_channels
        for out in channels:
            layers += [
                nn.Conv2d(width, out, kernel_size=3, stride=2, padding=1, bias=False),
                nn.BatchNorm2d(out),
                nn.ReLU(inplace=True),
            ]
            width = out
        self.features = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.out_dim = width

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.flatten(self.pool(self.features(x)), 1)


class ResNetEncoder(nn.Module):
    """ResNet-18 trunk with the classifier removed.

    With ``small_inputs`` the stem becomes a 3x3 stride-1 convolution and the
    first max-pool is dropped, the usual variant for 32x32 images.
    """

    def __init__(self, in_channels: int = 3, small_inputs: bool = True):
        super().__init__()
        backbone = models.resnet18(weights=None)
        if small_inputs:
            backbone.conv1 = nn.Conv2d(in_channels, 64, kernel_size=3, stride=1, padding=1, bias=False)
            backbone.maxpool = nn.Identity()
        elif in_channels != 3:
            backbone.conv1 = nn.Conv2d(in_channels, 64, kernel_size=7, stride=2, padding=3, bias=False)
        self.out_dim = backbone.fc.in_features
        backbone.fc = nn.Identity()
        self.backbone = backbone

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.backbone(x)


def build_encoder(cfg: EncoderConfig) -> nn.Module:
    """Instantiate the encoder named in ``cfg``; the result exposes ``out_dim``."""
    if cfg.name == "conv":
        return ConvEncoder(cfg.in_channels, cfg.channels)
    if cfg.name == "resnet18_star":
        return ResNetEncoder(cfg.in_channels, small_inputs=True)
    if cfg.name == "resnet18":
        return ResNetEncoder(cfg.in_channels, small_inputs=False)
    raise ValueError(f"Unknown encoder: {cfg.name}")


class MLPHead(nn.Module):
    """Two-layer MLP used as projection and prediction head."""

    def __init__(self, in_dim: int, hidden_dim: int, out_dim: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden_dim),
            nn.BatchNorm1d(hidden_dim),
            nn.ReLU(inplace=True),
            nn.Linear(hidden_dim, out_dim),
        )
        self.out_dim = out_dim

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)
