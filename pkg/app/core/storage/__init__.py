"""Persisted records and the run artifact repository."""
from .artifact_repository import (
    ArtifactRepository, MetricsLog, append_result, load_checkpoint, load_partition, load_results,
    partition_meta_path, read_metrics, save_checkpoint, save_partition,
)
from .models import (
    SCORE_TOLERANCE, MetricRecord, RaiPartition, ResultRecord, RunManifest, RunStatus, ScoreRecord,
)

__all__ = [
    "ArtifactRepository", "MetricsLog", "append_result", "load_checkpoint", "load_partition",
    "load_results", "partition_meta_path", "read_metrics", "save_checkpoint", "save_partition",
    "SCORE_TOLERANCE", "MetricRecord", "RaiPartition", "ResultRecord", "RunManifest", "RunStatus",
    "ScoreRecord",
]
