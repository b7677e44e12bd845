"""Command workflows."""
from .base_workflow import BaseWorkflow
from .pretrain_workflow import LinevalWorkflow, PretrainWorkflow, load_encoder, result_record
from .report_workflow import ReportWorkflow
from .sampling_workflow import SamplingRun, SamplingWorkflow, sample_rai, sample_rai_best_of
from .sweep_workflow import RatioSweepWorkflow, cell_name, run_sweep_cell

__all__ = [
    "BaseWorkflow", "LinevalWorkflow", "PretrainWorkflow", "load_encoder", "result_record",
    "ReportWorkflow", "SamplingRun", "SamplingWorkflow", "sample_rai", "sample_rai_best_of", "RatioSweepWorkflow",
    "cell_name", "run_sweep_cell",
]
