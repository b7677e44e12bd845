"""Report tables and figures."""
from .report import (
    EMPTY_CELL, MODE_ORDER, ResultsAnalyzer, delta_marker, ratio_sweep_figure, ratio_sweep_table,
    score_histogram_figure, write_figure,
)

__all__ = [
    "EMPTY_CELL", "MODE_ORDER", "ResultsAnalyzer", "delta_marker", "ratio_sweep_figure",
    "ratio_sweep_table", "score_histogram_figure", "write_figure",
]
