"""Prometheus metrics of a training run, exported as a textfile."""
import logging
from pathlib import Path
from typing import Optional, Union

from prometheus_client import (
    CollectorRegistry, Counter, Gauge, Histogram, disable_created_metrics, write_to_textfile,
)

logger = logging.getLogger(__name__)

# no *_created timestamp series in exported textfiles
disable_created_metrics()


class TrainingMonitor:
    """Step counter, loss gauges and step-duration histogram of one run.

    Each monitor owns its registries so concurrent runs in one process do not
    share series. Step durations live in a separate registry that is never
    written to the textfile; ``mean_step_seconds`` reports them instead.
    """

    def __init__(self, framework: str, mode: str):
        self.registry = CollectorRegistry()
        self.timing_registry = CollectorRegistry()
        self.labels = {"framework": framework, "mode": mode}
        self.steps = Counter(
            'pnda_training_steps_total',
            'Optimizer steps taken',
            ['framework', 'mode'],
            registry=self.registry,
        )
        self.last_loss = Gauge(
            'pnda_training_loss',
            'Loss of the most recent step',
            ['framework', 'mode'],
            registry=self.registry,
        )
        self.epoch_loss = Gauge(
            'pnda_training_epoch_loss',
            'Mean loss of the most recent epoch',
            ['framework', 'mode'],
            registry=self.registry,
        )
        self.failures = Counter(
            'pnda_training_failures_total',
            'Runs aborted by a non-finite loss',
            ['framework', 'mode'],
            registry=self.registry,
        )
        self.step_duration = Histogram(
            'pnda_training_step_duration_seconds',
            'Wall time per optimizer step',
            ['framework', 'mode'],
            registry=self.timing_registry,
        )

    def time_step(self):
        """Context manager timing one optimizer step."""
        return self.step_duration.labels(**self.labels).time()

    def record_step(self, loss: float) -> None:
        self.steps.labels(**self.labels).inc()
        self.last_loss.labels(**self.labels).set(loss)

    def record_epoch(self, mean_loss: float) -> None:
        self.epoch_loss.labels(**self.labels).set(mean_loss)

    def record_failure(self) -> None:
        self.failures.labels(**self.labels).inc()

    def step_count(self) -> float:
        return self.registry.get_sample_value('pnda_training_steps_total', self.labels) or 0.0

    def mean_step_seconds(self) -> Optional[float]:
        """Mean wall time of the timed steps, None before the first step."""
        count = self.timing_registry.get_sample_value('pnda_training_step_duration_seconds_count', self.labels)
        if not count:
            return None
        return self.timing_registry.get_sample_value('pnda_training_step_duration_seconds_sum', self.labels) / count

    def export(self, path: Union[str, Path]) -> Optional[Path]:
        """Write the step and loss series in the Prometheus text format."""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            write_to_textfile(str(path), self.registry)
            return path
        except OSError as e:
            logger.error(f"Failed to export metrics to {path}: {str(e)}")
            return None
