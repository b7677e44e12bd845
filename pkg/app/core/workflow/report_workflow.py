"""Summary tables over every results table below a directory."""
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from ..analysis.report import ResultsAnalyzer
from ..config.pnda_config import PndaConfig
from ..errors import ConfigError
from ..storage.artifact_repository import load_results
from .base_workflow import BaseWorkflow

logger = logging.getLogger(__name__)


class ReportWorkflow(BaseWorkflow):
    """``report``: mean and std of top-1 per framework and mode."""

    command = "report"

    def __init__(self, config: PndaConfig, output_dir, config_path=None,
                 results_dir: Optional[Union[str, Path]] = None):
        super().__init__(config, output_dir, config_path)
        self.results_dir = Path(results_dir) if results_dir is not None else self.repository.root
        self.analyzer: Optional[ResultsAnalyzer] = None

    @property
    def seed(self) -> Optional[int]:
        return None

    def setup(self) -> None:
        paths = sorted(self.results_dir.rglob(self.config.report.results_filename))
        results = load_results(paths)
        if "ratio" in results.columns:
            swept = results["ratio"].notna()
            if swept.any():
                logger.info(f"Leaving {int(swept.sum())} ratio-sweep rows out of the mode table")
            results = results[~swept]
        if results.empty:
            raise ConfigError(f"No results found below {self.results_dir}")
        logger.info(f"Loaded {len(results)} results from {len(paths)} tables")
        self.analyzer = ResultsAnalyzer(results)

    def run(self) -> Dict[str, Any]:
        summary = self.analyzer.summarize()
        self.repository.save_frame(summary, "summary.csv", float_format="%.4f")
        self.repository.save_text(self.analyzer.generate_report(), "report.md")
        return {"cells": len(summary), "runs": int(summary["n"].sum())}
