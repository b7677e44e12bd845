"""Ratio sweep: accuracy against the fraction of images treated as RAI."""
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

from ..analysis.report import ratio_sweep_figure, ratio_sweep_table, write_figure
from ..config.pnda_config import PndaConfig, config_hash
from ..contrastive.roles import AugMode
from ..errors import ConfigError
from ..etl.corpus import load_configured_corpus
from ..harness.pretrain import pretrain
from ..lineval.probe import evaluate_encoder
from ..storage.artifact_repository import ArtifactRepository, load_partition
from ..storage.models import RaiPartition
from .base_workflow import BaseWorkflow
from .pretrain_workflow import result_record

logger = logging.getLogger(__name__)


def cell_name(ratio: float) -> str:
    return f"ratio_{ratio:.4f}"


def run_sweep_cell(config: PndaConfig, base: RaiPartition, ratio: float, output_dir: str) -> Dict[str, Any]:
    """Relabel the top ``ratio`` of images as RAI, pretrain in PNDA mode and probe.

    Runs in a worker process when the sweep is parallel, so it reloads the
    corpus itself and writes only below ``output_dir``.
    """
    corpus = load_configured_corpus(config.data)
    cell_partition = base.with_top_ratio(ratio)
    repository = ArtifactRepository(output_dir)
    repository.save_partition(cell_partition)

    experiment = config.experiment.model_copy(update={"mode": AugMode.PNDA})
    result = pretrain(experiment, corpus, cell_partition, repository, config.monitoring)
    probe = evaluate_encoder(result.encoder, corpus, config.lineval)
    logger.info(f"ratio {ratio:.2f}: {cell_partition.rai_count()} RAI, top-1 {probe.top1:.4f}")
    return {
        "ratio": ratio,
        "n_rai": cell_partition.rai_count(),
        "top1": probe.top1,
        "final_loss": result.epoch_losses[-1],
        "artifacts": [str(repository.path(a)) for a in repository.artifacts],
    }


class RatioSweepWorkflow(BaseWorkflow):
    """``ratio-sweep``: one pretrain plus lineval cell per ratio."""

    command = "ratio-sweep"

    def __init__(self, config: PndaConfig, output_dir, config_path=None,
                 ratios: Optional[Sequence[float]] = None, jobs: int = 1):
        super().__init__(config, output_dir, config_path)
        self.ratios = list(ratios) if ratios is not None else list(config.report.ratios)
        self.jobs = max(1, jobs)
        self.partition: Optional[RaiPartition] = None

    def setup(self) -> None:
        bad = [r for r in self.ratios if not 0.0 <= r <= 1.0]
        if bad:
            raise ConfigError(f"ratios must lie in [0, 1], got {bad}")
        if not self.ratios:
            raise ConfigError("ratio sweep needs at least one ratio")
        path = self.config.experiment.partition_path
        if path is None:
            raise ConfigError("ratio sweep needs sampler scores: set experiment.partition_path or --partition")
        self.partition = load_partition(path)

    def run(self) -> Dict[str, Any]:
        jobs = [(r, str(self.repository.path(cell_name(r)))) for r in self.ratios]
        if self.jobs == 1:
            rows = [run_sweep_cell(self.config, self.partition, r, out) for r, out in jobs]
        else:
            logger.info(f"Running {len(jobs)} sweep cells on {self.jobs} processes")
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                futures = [pool.submit(run_sweep_cell, self.config, self.partition, r, out) for r, out in jobs]
                rows = [f.result() for f in futures]

        digest = config_hash(self.config)
        for row in rows:
            for artifact in row.pop("artifacts"):
                self.repository.track(Path(artifact))
        experiment = self.config.experiment.model_copy(update={"mode": AugMode.PNDA})
        for row in rows:
            record = result_record(experiment, row["top1"], digest, ratio=row["ratio"])
            self.repository.append_result(record, self.config.report.results_filename)

        sweep = ratio_sweep_table(rows)
        self.repository.save_frame(sweep, "ratio_sweep.csv", float_format="%.6f")
        if self.config.report.render_plots:
            rendered = write_figure(ratio_sweep_figure(sweep), self.repository.path("ratio_sweep.html"))
            if rendered is not None:
                self.repository.track(rendered)
        return {"ratios": self.ratios, "top1": sweep["top1"].tolist()}