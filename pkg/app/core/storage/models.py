"""Persisted record models."""
import math
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..contrastive.roles import AugMode, Framework
from ..rotation.entropy import MAX_ENTROPY
from ..rotation.types import Verdict

SCORE_TOLERANCE = 1e-6


class RunStatus(str, Enum):
    """Lifecycle of a command run."""
    INITIALIZED = "initialized"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class ScoreRecord(BaseModel):
    """Average rotation-prediction entropy of one image and its verdict."""
    model_config = ConfigDict(frozen=True)

    id: str
    score: float
    verdict: Verdict

    @field_validator("score")
    @classmethod
    def validate_score(cls, v):
        if not math.isfinite(v):
            raise ValueError(f"score must be finite, got {v}")
        # float32 softmax can overshoot ln 4 by rounding
        if v < -1e-9 or v > MAX_ENTROPY + 1e-6:
            raise ValueError(f"score must lie in [0, ln 4], got {v}")
        return v

    @property
    def is_rai(self) -> bool:
        return self.verdict is Verdict.RAI


class RaiPartition(BaseModel):
    """Map from image id to score and verdict, handed from sampler to harness."""

    records: List[ScoreRecord]
    rho: float
    margin: float
    # "threshold": verdicts follow rho + m; "rank": assigned by with_top_ratio
    cut: Literal["threshold", "rank"] = "threshold"
    config: Dict[str, Any] = Field(default_factory=dict)
    step1_accuracy: Optional[float] = None
    step2_accuracy: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None

    @model_validator(mode="after")
    def check_records(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("partition ids must be unique")
        if self.cut == "rank":
            return self
        threshold = self.rho + self.margin
        for r in self.records:
            # persisted scores carry 6 decimals
            if abs(r.score - threshold) <= SCORE_TOLERANCE:
                continue
            if r.is_rai != (r.score > threshold):
                raise ValueError(
                    f"record {r.id}: verdict {r.verdict.value} disagrees with score "
                    f"{r.score:.6f} against threshold {threshold:.6f}"
                )
        return self

    @property
    def threshold(self) -> float:
        return self.rho + self.margin

    def __len__(self) -> int:
        return len(self.records)

    def verdicts(self) -> Dict[str, bool]:
        """``id -> is_rai`` lookup."""
        return {r.id: r.is_rai for r in self.records}

    def is_rai(self, image_id: str) -> bool:
        for r in self.records:
            if r.id == image_id:
                return r.is_rai
        raise KeyError(f"image {image_id} is not in the partition")

    def covers(self, ids) -> List[str]:
        """Ids of ``ids`` that the partition has no record for."""
        known = {r.id for r in self.records}
        return [i for i in ids if i not in known]

    def rai_count(self) -> int:
        return sum(r.is_rai for r in self.records)

    def with_top_ratio(self, ratio: float) -> "RaiPartition":
        """Relabel the top ``round(ratio * N)`` images by descending score as RAI.

        Ties are broken by id.
        """
        if not 0.0 <= ratio <= 1.0:
            raise ValueError(f"ratio must lie in [0, 1], got {ratio}")
        ranked = sorted(self.records, key=lambda r: (-r.score, r.id))
        n_rai = int(round(ratio * len(ranked)))
        rai_ids = {r.id for r in ranked[:n_rai]}

        records = [
            ScoreRecord(id=r.id, score=r.score, verdict=Verdict.RAI if r.id in rai_ids else Verdict.NON_RAI)
            for r in self.records
        ]
        return RaiPartition(
            records=records, rho=self.rho, margin=self.margin, cut="rank",
            config={**self.config, "top_ratio": ratio},
            step1_accuracy=self.step1_accuracy, step2_accuracy=self.step2_accuracy,
        )


class MetricRecord(BaseModel):
    """One line of the pretraining metrics log."""
    epoch: int
    step: int
    loss: float
    lr: float
    mode: AugMode
    framework: Framework


class ResultRecord(BaseModel):
    """One row of the linear-evaluation results table."""
    framework: str
    mode: str
    encoder: str
    top1: float = Field(ge=0, le=1)
    seed: int
    config_hash: str
    ratio: Optional[float] = None


class RunManifest(BaseModel):
    """Completion marker of a command run, written last."""
    command: str
    config_path: Optional[str] = None
    seed: Optional[int] = None
    output_dir: str
    artifacts: List[str] = Field(default_factory=list)
    config_hash: Optional[str] = None
    status: RunStatus = RunStatus.COMPLETED
    started_at: Optional[datetime] = None
    finished_at: Optional[datetime] = None
    details: Dict[str, Any] = Field(default_factory=dict)
