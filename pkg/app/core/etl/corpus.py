"""Corpus ingestion: npz corpus files, tensor conversion and view datasets."""
import logging
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
import torch
from torch.utils.data import Dataset

from ..config.base_config import DataConfig
from ..errors import ConfigError, ShapeError
from ..rotation.types import ImageSample, Verdict

logger = logging.getLogger(__name__)


def corpus_to_tensor(corpus: Sequence[ImageSample], dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Stack a corpus into an N x C x H x W tensor."""
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    sizes = {img.pixels.shape for img in corpus}
    if len(sizes) != 1:
        raise ShapeError(f"corpus mixes image shapes: {sorted(sizes)}")
    stacked = np.stack([img.pixels for img in corpus]).transpose(0, 3, 1, 2)
    return torch.from_numpy(np.ascontiguousarray(stacked)).to(dtype)


def corpus_labels(corpus: Sequence[ImageSample]) -> np.ndarray:
    """Class labels of a labelled corpus."""
    missing = [img.id for img in corpus if img.label is None]
    if missing:
        raise ValueError(f"{len(missing)} images carry no class label, e.g. {missing[0]}")
    return np.asarray([img.label for img in corpus], dtype=np.int64)


def save_corpus(corpus: Sequence[ImageSample], path: Union[str, Path]) -> Path:
    """Write a corpus to a compressed npz file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(
        path,
        ids=np.asarray([img.id for img in corpus]),
        pixels=np.stack([img.pixels for img in corpus]).astype(np.float32),
        truth=np.asarray([img.truth.value if img.truth else "" for img in corpus]),
        labels=np.asarray([-1 if img.label is None else img.label for img in corpus], dtype=np.int64),
    )
    logger.info(f"Saved corpus of {len(corpus)} images to {path}")
    return path


def load_corpus(path: Union[str, Path]) -> List[ImageSample]:
    """Read a corpus written by :func:`save_corpus`.

    Only ``ids`` and ``pixels`` are required; ``truth`` and ``labels`` are
    optional arrays.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Corpus file not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as data:
            ids = [str(i) for i in data["ids"]]
            pixels = data["pixels"].astype(np.float64)
            truth = data["truth"] if "truth" in data else None
            labels = data["labels"] if "labels" in data else None

        corpus = []
        for i, image_id in enumerate(ids):
            corpus.append(ImageSample(
                id=image_id,
                pixels=pixels[i],
                truth=Verdict(truth[i]) if truth is not None and truth[i] else None,
                label=int(labels[i]) if labels is not None and labels[i] >= 0 else None,
            ))
    except Exception as e:
        logger.error(f"Failed to read corpus {path}: {str(e)}")
        raise ConfigError(f"Corpus file {path} is invalid: {e}") from e
    logger.info(f"Loaded corpus of {len(corpus)} images from {path}")
    return corpus


def load_configured_corpus(data_cfg: DataConfig) -> List[ImageSample]:
    """Load the corpus file or generate the synthetic corpus named by ``data_cfg``."""
    if data_cfg.synthetic is not None:
        from ..harness.synthetic import generate_synthetic_corpus
        return generate_synthetic_corpus(data_cfg.synthetic)
    return load_corpus(data_cfg.resolve_corpus_path())


class TwoViewDataset(Dataset):
    """Yields two independently augmented views of each image plus its index."""

    def __init__(self, images: torch.Tensor, transform: Optional[Callable] = None):
        self.images = images
        self.transform = transform

    def __len__(self) -> int:
        return self.images.shape[0]

    def __getitem__(self, index: int):
        image = self.images[index]
        if self.transform is None:
            return image, image.clone(), index
        return self.transform(image), self.transform(image), index
