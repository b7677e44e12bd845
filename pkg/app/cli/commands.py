import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List

from ..core.config.pnda_config import PndaConfig, load_config
from ..core.workflow import (
    LinevalWorkflow, PretrainWorkflow, RatioSweepWorkflow, ReportWorkflow, SamplingWorkflow,
)

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_ROOT = Path("runs")


def load_run_config(args: argparse.Namespace) -> PndaConfig:
    """Config file, then ``--override`` and command flags, then ``--seed``."""
    overrides: List[str] = list(args.override or [])
    for flag, key in (("framework", "experiment.framework"), ("mode", "experiment.mode")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    config = load_config(args.config, overrides).with_seed(args.seed)
    partition = getattr(args, "partition", None)
    if partition is not None:
        experiment = config.experiment.model_copy(update={"partition_path": str(partition)})
        config = config.model_copy(update={"experiment": experiment})
    logging.getLogger().setLevel(config.monitoring.logging_level.upper())
    return config


def output_dir(args: argparse.Namespace) -> Path:
    return Path(args.out) if args.out else DEFAULT_OUTPUT_ROOT / args.command


def _warn_unused_jobs(args: argparse.Namespace) -> None:
    if args.jobs > 1:
        logger.warning(f"--jobs only parallelizes ratio-sweep cells; {args.command} runs sequentially")


def cmd_sample_rai(args: argparse.Namespace) -> Dict[str, Any]:
    _warn_unused_jobs(args)
    config = load_run_config(args)
    return SamplingWorkflow(config, output_dir(args), args.config).execute()


def cmd_pretrain(args: argparse.Namespace) -> Dict[str, Any]:
    _warn_unused_jobs(args)
    config = load_run_config(args)
    return PretrainWorkflow(config, output_dir(args), args.config).execute()


def cmd_lineval(args: argparse.Namespace) -> Dict[str, Any]:
    _warn_unused_jobs(args)
    config = load_run_config(args)
    return LinevalWorkflow(config, output_dir(args), args.config, checkpoint=args.checkpoint).execute()


def cmd_ratio_sweep(args: argparse.Namespace) -> Dict[str, Any]:
    config = load_run_config(args)
    workflow = RatioSweepWorkflow(config, output_dir(args), args.config, ratios=args.ratios, jobs=args.jobs)
    return workflow.execute()


def cmd_report(args: argparse.Namespace) -> Dict[str, Any]:
    config = load_run_config(args)
    results_dir = args.results or args.out or DEFAULT_OUTPUT_ROOT
    return ReportWorkflow(config, output_dir(args), args.config, results_dir=results_dir).execute()
