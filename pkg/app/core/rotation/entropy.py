"""Natural-log entropy of rotation-prediction distributions."""
import math
from typing import Sequence, Union

import numpy as np
import torch

from .types import ProbVector

MAX_ENTROPY = math.log(4)
PROB_FLOOR = 1e-12


def entropy(p: Union[ProbVector, Sequence[float]]) -> float:
    """Entropy of a rotation distribution, with 0 * ln 0 taken as 0.

    Args:
        p: ProbVector or any four probabilities summing to 1

    Returns:
        Entropy in nats, within [0, ln 4]
    """
    if not isinstance(p, ProbVector):
        p = ProbVector(p=tuple(float(x) for x in p))
    probs = p.as_array()
    return float(-np.sum(probs * np.log(np.clip(probs, PROB_FLOOR, None))))


def batch_entropy(probs: torch.Tensor) -> torch.Tensor:
    """Differentiable entropy over the last dimension of ``probs``."""
    return -(probs * probs.clamp_min(PROB_FLOOR).log()).sum(dim=-1)
