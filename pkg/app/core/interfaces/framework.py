from abc import ABC, abstractmethod
from typing import List, Optional, Sequence

import torch
import torch.nn as nn

from ..contrastive.pair_sets import PairSpec
from ..contrastive.roles import AugMode, RotationRole, resolve_role


class IContrastiveFramework(nn.Module, ABC):
    """Interface for contrastive pretraining frameworks."""

    def __init__(self, mode: AugMode):
        super().__init__()
        self.mode = AugMode(mode)

    def roles(self, verdicts: Sequence[Optional[bool]]) -> List[RotationRole]:
        """Rotation role of every image in the batch.

        Args:
            verdicts: RAI verdict per image; None where the mode ignores the partition

        Returns:
            List of RotationRole, one per image
        """
        return [resolve_role(self.mode, v) for v in verdicts]

    @property
    @abstractmethod
    def encoder(self) -> nn.Module:
        """Online feature extractor kept after pretraining."""
        pass

    @abstractmethod
    def compute_loss(self, view1: torch.Tensor, view2: torch.Tensor,
                     verdicts: Sequence[Optional[bool]]) -> torch.Tensor:
        """Loss of one training step.

        Args:
            view1: First augmented view of each image, B x C x H x W
            view2: Second augmented view
            verdicts: RAI verdict per image

        Returns:
            Scalar loss
        """
        pass

    @abstractmethod
    def batch_specs(self, verdicts: Sequence[Optional[bool]]) -> List[PairSpec]:
        """Positive and negative sets the last step used, one per anchor."""
        pass

    def on_after_step(self) -> None:
        """Hook run after each optimizer step (EMA update, queue maintenance)."""
        pass

    def online_parameters(self):
        """Parameters the optimizer updates."""
        return [p for p in self.parameters() if p.requires_grad]
