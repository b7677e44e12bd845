"""Accuracy tables, ratio-sweep tables and score-histogram figures."""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
import plotly.graph_objects as go

from ..contrastive.roles import AugMode, Framework

logger = logging.getLogger(__name__)

MODE_ORDER = [m.value for m in (AugMode.NONE, AugMode.PDA, AugMode.NDA, AugMode.POSITIVE_ONLY, AugMode.PNDA)]
FRAMEWORK_ORDER = [f.value for f in Framework]
EMPTY_CELL = "-"


def _ordered(values: Sequence[str], order: List[str]) -> List[str]:
    known = [v for v in order if v in set(values)]
    return known + sorted(set(values) - set(order))


def delta_marker(delta: float) -> str:
    """Signed difference to the baseline in percentage points, e.g. ``↑0.44``."""
    if np.isnan(delta):
        return ""
    if delta > 0:
        return f"↑{delta:.2f}"
    if delta < 0:
        return f"↓{-delta:.2f}"
    return "0.00"


class ResultsAnalyzer:
    """Aggregates linear-evaluation results into report tables."""

    def __init__(self, results: pd.DataFrame):
        """Initialize analyzer with a results table.

        Args:
            results: Rows with at least ``framework``, ``mode``, ``top1`` and ``seed``
        """
        missing = {"framework", "mode", "top1"} - set(results.columns)
        if missing:
            raise ValueError(f"results table lacks columns {sorted(missing)}")
        self.results = results.copy()

    def summarize(self) -> pd.DataFrame:
        """Mean and standard deviation of top-1 (in percent) per framework and mode.

        Returns:
            DataFrame with ``framework, mode, n, mean, std, delta``; ``std`` is
            NaN for a single seed and ``delta`` is measured against the NONE
            mode of the same framework
        """
        frame = self.results.assign(top1=self.results["top1"].astype(float) * 100.0)
        summary = (
            frame.groupby(["framework", "mode"])["top1"]
            .agg(n="count", mean="mean", std="std")
            .reset_index()
        )
        baseline = summary[summary["mode"] == AugMode.NONE.value].set_index("framework")["mean"]
        summary["delta"] = summary["mean"] - summary["framework"].map(baseline)
        summary.loc[summary["mode"] == AugMode.NONE.value, "delta"] = np.nan
        summary["framework"] = pd.Categorical(
            summary["framework"], _ordered(summary["framework"].unique(), FRAMEWORK_ORDER), ordered=True
        )
        summary["mode"] = pd.Categorical(
            summary["mode"], _ordered(summary["mode"].unique(), MODE_ORDER), ordered=True
        )
        summary = summary.sort_values(["framework", "mode"]).reset_index(drop=True)
        summary["framework"] = summary["framework"].astype(str)
        summary["mode"] = summary["mode"].astype(str)
        return summary

    def accuracy_table(self, summary: Optional[pd.DataFrame] = None) -> pd.DataFrame:
        """Framework-by-mode table of ``mean±std`` cells with delta markers.

        Cells without results are rendered as ``-``.
        """
        summary = self.summarize() if summary is None else summary
        modes = _ordered(summary["mode"].unique(), MODE_ORDER)
        frameworks = _ordered(summary["framework"].unique(), FRAMEWORK_ORDER)
        table = pd.DataFrame(EMPTY_CELL, index=frameworks, columns=modes)
        for row in summary.itertuples(index=False):
            cell = f"{row.mean:.2f}"
            if not np.isnan(row.std):
                cell += f"±{row.std:.2f}"
            marker = delta_marker(row.delta)
            if marker:
                cell += f" {marker}"
            table.loc[row.framework, row.mode] = cell
        table.index.name = "framework"
        return table

    def generate_report(self, title: str = "Top-1 linear classification accuracy (%)") -> str:
        """Markdown report with the accuracy table.

        Returns:
            str: Markdown formatted report
        """
        try:
            summary = self.summarize()
            table = self.accuracy_table(summary)
            header = ["framework"] + list(table.columns)
            lines = [
                f"# {title}\n",
                f"- Results: {len(self.results)} runs",
                f"- Seeds: {self.results['seed'].nunique() if 'seed' in self.results else 'unknown'}\n",
                "| " + " | ".join(header) + " |",
                "|" + "|".join(["---"] * len(header)) + "|",
            ]
            for framework, row in table.iterrows():
                lines.append("| " + " | ".join([framework] + list(row.values)) + " |")
            lines.append("")
            lines.append("Deltas are percentage points against the `none` mode of the same framework.")
            return "\n".join(lines) + "\n"
        except Exception as e:
            logger.error(f"Report generation failed: {str(e)}")
            raise


def ratio_sweep_table(rows: List[Dict[str, Union[float, int, str]]]) -> pd.DataFrame:
    """One row per ratio, sorted by ratio, with top-1 in percent."""
    frame = pd.DataFrame(rows)
    if frame.empty:
        return pd.DataFrame(columns=["ratio", "n_rai", "top1", "top1_pct"])
    frame = frame.sort_values("ratio").reset_index(drop=True)
    frame["top1_pct"] = frame["top1"] * 100.0
    return frame


def score_histogram_figure(histogram: pd.DataFrame) -> go.Figure:
    """Overlaid bars of the per-step score histograms."""
    fig = go.Figure()
    centers = (histogram["bin_start"] + histogram["bin_end"]) / 2
    width = float((histogram["bin_end"] - histogram["bin_start"]).iloc[0])
    for column in histogram.columns:
        if column in ("bin_start", "bin_end"):
            continue
        fig.add_trace(go.Bar(x=centers, y=histogram[column], width=width, name=column, opacity=0.6))
    fig.update_layout(
        title="Score distribution",
        xaxis_title="Average rotation-prediction entropy",
        yaxis_title="Images",
        barmode="overlay",
    )
    return fig


def ratio_sweep_figure(sweep: pd.DataFrame) -> go.Figure:
    fig = go.Figure()
    fig.add_trace(go.Scatter(x=sweep["ratio"] * 100.0, y=sweep["top1_pct"], mode="lines+markers", name="top-1"))
    fig.update_layout(
        title="Accuracy against ratio of positive rotated images",
        xaxis_title="Ratio of positive rotated images (%)",
        yaxis_title="Top-1 accuracy (%)",
    )
    return fig


def write_figure(fig: go.Figure, path: Union[str, Path]) -> Optional[Path]:
    """Write a standalone html rendering; failures are logged, not raised."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.write_html(str(path), include_plotlyjs="cdn")
        return path
    except Exception as e:
        logger.error(f"Failed to render {path.name}: {str(e)}")
        return None
