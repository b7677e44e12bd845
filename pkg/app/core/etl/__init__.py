"""Corpus ingestion and view generation."""
from .augmentations import build_augmentation, build_step
from .corpus import (
    TwoViewDataset, corpus_labels, corpus_to_tensor, load_configured_corpus, load_corpus, save_corpus,
)

__all__ = [
    "build_augmentation", "build_step", "TwoViewDataset", "corpus_labels", "corpus_to_tensor",
    "load_configured_corpus", "load_corpus", "save_corpus",
]
