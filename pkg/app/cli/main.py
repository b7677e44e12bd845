import argparse
import logging
import sys
from typing import List, Optional

from ..core.errors import PndaError
from .commands import cmd_lineval, cmd_pretrain, cmd_ratio_sweep, cmd_report, cmd_sample_rai

logger = logging.getLogger(__name__)

MODE_CHOICES = ["none", "pda", "nda", "pnda"]
FRAMEWORK_CHOICES = ["simclr", "moco_v2", "byol"]


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML configuration file; defaults apply when omitted")
    parser.add_argument("--seed", type=int, help="Seed for sampler, pretraining and probe")
    parser.add_argument("--out", help="Output directory (default: runs/<command>)")
    parser.add_argument("--jobs", type=int, default=1, help="Worker processes for independent sweep cells")
    parser.add_argument("--override", action="append", metavar="KEY=VALUE",
                        help="Override a config key, e.g. sampler.beta2=40; repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pnda", description="Rotation-agnostic sampling and PNDA pretraining")
    subparsers = parser.add_subparsers(dest="command", required=True, help="Available commands")

    sample_p = subparsers.add_parser("sample-rai", help="Train the rotation predictor and partition the corpus")
    _common(sample_p)
    sample_p.set_defaults(handler=cmd_sample_rai)

    pretrain_p = subparsers.add_parser("pretrain", help="Contrastive pretraining")
    _common(pretrain_p)
    pretrain_p.add_argument("--framework", choices=FRAMEWORK_CHOICES)
    pretrain_p.add_argument("--mode", choices=MODE_CHOICES)
    pretrain_p.add_argument("--partition", help="Partition file from sample-rai")
    pretrain_p.set_defaults(handler=cmd_pretrain)

    lineval_p = subparsers.add_parser("lineval", help="Linear evaluation of a pretrained encoder")
    _common(lineval_p)
    lineval_p.add_argument("--checkpoint", help="Encoder checkpoint (default: <out>/checkpoints/encoder.pt)")
    lineval_p.set_defaults(handler=cmd_lineval)

    sweep_p = subparsers.add_parser("ratio-sweep", help="Accuracy against the ratio of positive rotated images")
    _common(sweep_p)
    sweep_p.add_argument("--framework", choices=FRAMEWORK_CHOICES)
    sweep_p.add_argument("--partition", help="Partition file from sample-rai")
    sweep_p.add_argument("--ratios", type=float, nargs="+", help="Ratios in [0, 1] (default: report.ratios)")
    sweep_p.set_defaults(handler=cmd_ratio_sweep)

    report_p = subparsers.add_parser("report", help="Summary tables over results files")
    _common(report_p)
    report_p.add_argument("--results", help="Directory searched recursively for results tables (default: --out, else runs/)")
    report_p.set_defaults(handler=cmd_report)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    args = build_parser().parse_args(argv)
    try:
        args.handler(args)
        return 0
    except PndaError as e:
        logger.error(f"{args.command} failed: {str(e)}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
