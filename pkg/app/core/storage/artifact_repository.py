"""File-backed repository for run artifacts."""
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd
import torch
from pydantic import BaseModel

from ..errors import ConfigError
from ..rotation.types import Verdict
from .models import MetricRecord, RaiPartition, ResultRecord, RunManifest, ScoreRecord

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1
PARTITION_COLUMNS = ["id", "score", "verdict"]
RESULT_COLUMNS = ["framework", "mode", "encoder", "top1", "seed", "config_hash", "ratio"]


def partition_meta_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def save_partition(partition: RaiPartition, path: Union[str, Path]) -> Path:
    """Write ``id,score,verdict`` rows plus a sidecar metadata file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [(r.id, r.score, r.verdict.value) for r in partition.records], columns=PARTITION_COLUMNS
    )
    frame.to_csv(path, index=False, float_format="%.6f", encoding="utf-8", lineterminator="\n")
    meta = partition.model_dump(mode="json", exclude={"records"})
    meta["n_records"] = len(partition)
    meta["n_rai"] = partition.rai_count()
    partition_meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    logger.info(f"Saved partition of {len(partition)} images ({partition.rai_count()} RAI) to {path}")
    return path


def load_partition(path: Union[str, Path]) -> RaiPartition:
    """Read a partition file and its sidecar metadata."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Partition file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype={"id": str, "verdict": str}, encoding="utf-8")
        missing = set(PARTITION_COLUMNS) - set(frame.columns)
        if missing:
            raise ConfigError(f"Partition file {path} lacks columns {sorted(missing)}")
        meta: Dict[str, Any] = {}
        meta_path = partition_meta_path(path)
        if meta_path.is_file():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        meta.pop("n_records", None)
        meta.pop("n_rai", None)
        records = [
            ScoreRecord(id=row.id, score=float(row.score), verdict=Verdict(row.verdict))
            for row in frame.itertuples(index=False)
        ]
        return RaiPartition(records=records, **{"rho": 0.0, "margin": 0.0, "cut": "rank", **meta})
    except ConfigError:
        raise
    except Exception as e:
        logger.error(f"Failed to load partition {path}: {str(e)}")
        raise ConfigError(f"Partition file {path} is invalid: {e}") from e


def save_checkpoint(module: torch.nn.Module, path: Union[str, Path],
                    config: Optional[BaseModel] = None, extra: Optional[Dict[str, Any]] = None) -> Path:
    """Versioned checkpoint with the configuration snapshot embedded."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": config.model_dump(mode="json") if config is not None else None,
        "state_dict": module.state_dict(),
        "extra": extra or {},
    }, path)
    return path


def load_checkpoint(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Checkpoint not found: {path}")
    blob = torch.load(path, map_location="cpu", weights_only=False)
    version = blob.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ConfigError(f"Checkpoint {path} has format version {version}, expected {CHECKPOINT_FORMAT_VERSION}")
    return blob


def append_result(record: ResultRecord, path: Union[str, Path]) -> Path:
    """Add one row to the results table.

    A row with the same framework, mode, encoder, seed, config hash and ratio
    is replaced, so rerunning an evaluation leaves the table unchanged.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([record.model_dump()], columns=RESULT_COLUMNS).astype({"ratio": "float64"})
    if path.is_file():
        existing = pd.read_csv(path, dtype={"config_hash": str})
        keys = [c for c in RESULT_COLUMNS if c != "top1"]
        same = (existing[keys].astype(str) == frame[keys].astype(str).iloc[0]).all(axis=1)
        frame = pd.concat([existing[~same], frame], ignore_index=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def load_results(paths: List[Union[str, Path]]) -> pd.DataFrame:
    """Concatenate results tables."""
    frames = [pd.read_csv(p, dtype={"config_hash": str}) for p in paths if Path(p).is_file()]
    if not frames:
        return pd.DataFrame(columns=RESULT_COLUMNS)
    return pd.concat(frames, ignore_index=True)


class ArtifactRepository:
    """Writes the artifacts of one run below ``root`` and remembers them for the manifest."""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.artifacts: List[str] = []

    def path(self, name: str) -> Path:
        return self.root / name

    def track(self, path: Path) -> Path:
        rel = str(path.relative_to(self.root)) if path.is_relative_to(self.root) else str(path)
        if rel not in self.artifacts:
            self.artifacts.append(rel)
        return path

    def save_partition(self, partition: RaiPartition, name: str = "partition.csv") -> Path:
        path = save_partition(partition, self.path(name))
        self.track(partition_meta_path(path))
        return self.track(path)

    def save_frame(self, frame: pd.DataFrame, name: str, float_format: Optional[str] = None) -> Path:
        path = self.path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=float_format, lineterminator="\n")
        return self.track(path)

    def save_json(self, payload: Any, name: str) -> Path:
        path = self.path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str), encoding="utf-8")
        return self.track(path)

    def save_text(self, text: str, name: str) -> Path:
        path = self.path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        return self.track(path)

    def save_checkpoint(self, module: torch.nn.Module, name: str,
                        config: Optional[BaseModel] = None, extra: Optional[Dict[str, Any]] = None) -> Path:
        return self.track(save_checkpoint(module, self.path(name), config, extra))

    def append_result(self, record: ResultRecord, name: str = "results.csv") -> Path:
        return self.track(append_result(record, self.path(name)))

    def metrics_log(self, name: str = "metrics.jsonl") -> "MetricsLog":
        return MetricsLog(self.track(self.path(name)))

    def write_manifest(self, manifest: RunManifest, name: str = "manifest.json") -> Path:
        """Write the manifest atomically; it marks the run as complete."""
        manifest = manifest.model_copy(update={"artifacts": list(self.artifacts)})
        path = self.path(name)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
        os.replace(tmp, path)
        logger.info(f"Wrote manifest with {len(manifest.artifacts)} artifacts to {path}")
        return path


class MetricsLog:
    """Line-delimited JSON log of per-step training metrics."""

    def __init__(self, path: Path):
        self.path = path
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = None

    def __enter__(self) -> "MetricsLog":
        self._fh = self.path.open("w", encoding="utf-8")
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def write(self, record: MetricRecord) -> None:
        if self._fh is None:
            raise RuntimeError("MetricsLog must be used as a context manager")
        self._fh.write(record.model_dump_json() + "\n")
        self._fh.flush()


def read_metrics(path: Union[str, Path]) -> List[MetricRecord]:
    with Path(path).open(encoding="utf-8") as fh:
        return [MetricRecord.model_validate_json(line) for line in fh if line.strip()]
