"""Desk-scale contrastive pretraining harness."""
from .ema import init_target, momentum_update
from .frameworks import BYOL, FRAMEWORKS, MoCoV2, SimCLR, build_framework
from .pretrain import PretrainResult, build_loader, pretrain, resolve_verdicts, warm_fill_queue
from .queue import EmbeddingQueue
from .synthetic import FAMILY_NAMES, generate_synthetic_corpus

__all__ = [
    "init_target", "momentum_update", "BYOL", "FRAMEWORKS", "MoCoV2", "SimCLR", "build_framework",
    "PretrainResult", "build_loader", "pretrain", "resolve_verdicts", "warm_fill_queue",
    "EmbeddingQueue", "FAMILY_NAMES", "generate_synthetic_corpus",
]
