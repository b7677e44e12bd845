"""Probe, Step 1, Step 2, scoring and partitioning as one command."""
import copy
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from ..analysis.report import score_histogram_figure, write_figure
from ..config.sampler_config import SamplerConfig
from ..errors import TuningCriterionError
from ..etl.corpus import load_configured_corpus
from ..models.rotation_predictor import RotationPredictor
from ..rotation.types import ImageSample
from ..sampler.scoring import ground_truth_quality, partition, score_corpus, score_gap, score_histogram
from ..sampler.trainer import OverfitCurve, run_overfit_probe, train_step1, train_step2, tune_check
from ..storage.models import RaiPartition
from ..utils.seeding import seed_everything
from .base_workflow import BaseWorkflow

logger = logging.getLogger(__name__)


class SamplingRun(BaseModel):
    """Everything one sampler run produces."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    seed: int
    beta1: int
    step1_model: RotationPredictor
    model: RotationPredictor
    step1_scores: List[Tuple[str, float]]
    step2_scores: List[Tuple[str, float]]
    partition: RaiPartition
    curve: Optional[OverfitCurve] = None

    @property
    def accuracy_drift(self) -> float:
        return abs(self.partition.step2_accuracy - self.partition.step1_accuracy)


def sample_rai(corpus: Sequence[ImageSample], cfg: SamplerConfig) -> SamplingRun:
    """Run the full two-step sampler once with ``cfg.seed``.

    Args:
        corpus: Images to partition
        cfg: Sampler configuration; beta1 None runs the overfit probe first

    Returns:
        SamplingRun with both models, both score lists and the partition
    """
    seed_everything(cfg.seed)
    model = RotationPredictor.from_config(cfg.encoder)

    curve = None
    beta1 = cfg.beta1
    if beta1 is None:
        curve = run_overfit_probe(corpus, model, cfg)
        beta1 = curve.overfit_epoch

    train_step1(corpus, model, cfg, epochs=beta1)
    step1_scores = score_corpus(model, corpus, cfg.score_batch_size)
    step1_model = copy.deepcopy(model)

    train_step2(corpus, model, cfg)
    step2_scores = score_corpus(model, corpus, cfg.score_batch_size)

    result = partition(
        step2_scores, cfg.rho, cfg.margin,
        config={**cfg.model_dump(mode="json"), "beta1": beta1},
        step1_accuracy=model.rotation_accuracy["step1"],
        step2_accuracy=model.rotation_accuracy["step2"],
    )
    quality = ground_truth_quality(result, corpus)
    if quality is not None:
        result = result.model_copy(update=quality)
        logger.info(f"RAI precision {quality['precision']:.4f}, recall {quality['recall']:.4f}")

    return SamplingRun(
        seed=cfg.seed, beta1=beta1, step1_model=step1_model, model=model,
        step1_scores=step1_scores, step2_scores=step2_scores, partition=result, curve=curve,
    )


def sample_rai_best_of(corpus: Sequence[ImageSample], cfg: SamplerConfig) -> SamplingRun:
    """Run the sampler with seeds ``seed .. seed + n_runs - 1`` and keep the most stable run.

    The kept run is the one whose rotation accuracy moved least between
    Step 1 and Step 2; the first run wins ties. Runs stop early once one
    meets the tuning criterion.
    """
    runs = []
    for offset in range(cfg.n_runs):
        run_cfg = cfg.model_copy(update={"seed": cfg.seed + offset})
        runs.append(sample_rai(corpus, run_cfg))
        logger.info(f"Sampler run {offset + 1}/{cfg.n_runs}: accuracy drift {runs[-1].accuracy_drift:.4f}")
        if tune_check(runs[-1].partition.step1_accuracy, runs[-1].partition.step2_accuracy, cfg.tune_tolerance):
            break
    return min(runs, key=lambda r: r.accuracy_drift)


class SamplingWorkflow(BaseWorkflow):
    """``sample-rai``: emit the RAI partition and its diagnostics."""

    command = "sample-rai"

    def __init__(self, config, output_dir, config_path=None):
        super().__init__(config, output_dir, config_path)
        self.corpus: List[ImageSample] = []
        self.best: Optional[SamplingRun] = None

    @property
    def seed(self) -> Optional[int]:
        return self.config.sampler.seed

    def setup(self) -> None:
        self.corpus = load_configured_corpus(self.config.data)
        logger.info(f"Loaded corpus of {len(self.corpus)} images")

    def run(self) -> Dict[str, Any]:
        cfg = self.config.sampler
        self.best = sample_rai_best_of(self.corpus, cfg)
        self._write_artifacts(self.best)

        acc1 = self.best.partition.step1_accuracy
        acc2 = self.best.partition.step2_accuracy
        passed = tune_check(acc1, acc2, cfg.tune_tolerance)
        results = {
            "seed": self.best.seed,
            "beta1": self.best.beta1,
            "n_images": len(self.best.partition),
            "n_rai": self.best.partition.rai_count(),
            "step1_accuracy": acc1,
            "step2_accuracy": acc2,
            "step1_score_gap": score_gap(self.best.step1_scores, self.corpus),
            "step2_score_gap": score_gap(self.best.step2_scores, self.corpus),
            "precision": self.best.partition.precision,
            "recall": self.best.partition.recall,
            "tune_check": passed,
        }
        self.results.update(results)
        if not passed:
            raise TuningCriterionError(
                f"rotation accuracy moved from {acc1:.4f} after Step 1 to {acc2:.4f} after Step 2 "
                f"(tolerance {cfg.tune_tolerance}); lower sampler.lambda_max or sampler.margin and rerun"
            )
        return results

    def _write_artifacts(self, run: SamplingRun) -> None:
        repo = self.repository
        repo.save_partition(run.partition)

        histogram = score_histogram(
            {"step1": [s for _, s in run.step1_scores], "step2": [s for _, s in run.step2_scores]},
            self.config.report.histogram_bin_width,
        )
        repo.save_frame(histogram, "score_histogram.csv", float_format="%.6f")
        if run.curve is not None:
            repo.save_frame(run.curve.to_frame(), "overfit_curve.csv", float_format="%.6f")

        for step, model in (("step1", run.step1_model), ("step2", run.model)):
            extra = {"rotation_accuracy": model.rotation_accuracy}
            repo.save_checkpoint(model.encoder, f"checkpoints/{step}_G.pt", self.config.sampler, extra)
            repo.save_checkpoint(model.head, f"checkpoints/{step}_F.pt", self.config.sampler, extra)

        if self.config.report.render_plots:
            rendered = write_figure(score_histogram_figure(histogram), repo.path("score_histogram.html"))
            if rendered is not None:
                repo.track(rendered)
