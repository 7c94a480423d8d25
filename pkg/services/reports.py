"""HTML reports for pipeline runs and ablation batteries."""

import logging
from pathlib import Path

import pandas as pd
import plotly.graph_objects as go

from utils.data_converter import cmc_to_dataframe
from utils.html_renderer import write_html

REPORT_FILE = "report.html"


def _create_cmc_chart(curves: dict[str, list[float]], div_id: str = "cmc-chart") -> str:
    """Create interactive CMC chart using Plotly."""
    fig = go.Figure()
    df = cmc_to_dataframe(curves)

    for name, curve in df.groupby("curve", sort=False):
        fig.add_trace(go.Scatter(x=curve["rank"], y=curve["accuracy"], mode="lines+markers", name=name))

    fig.update_layout(
        title="CMC", xaxis_title="Rank", yaxis_title="Matching accuracy", template="plotly_dark", height=500
    )
    fig.update_yaxes(range=[0, 1.02])

    return fig.to_html(include_plotlyjs="cdn", div_id=div_id)


def _create_rank1_chart(table: pd.DataFrame) -> str:
    """Bar chart of mean rank-1 per condition with the seed standard deviation as error bars."""
    fig = go.Figure()
    fig.add_trace(
        go.Bar(x=list(table.index), y=table["mean"], error_y=dict(type="data", array=table["std"].fillna(0.0)))
    )
    fig.update_layout(title="Rank-1 by condition", yaxis_title="Rank-1", template="plotly_dark", height=500)
    return fig.to_html(include_plotlyjs="cdn", div_id="rank1-chart")


def render_run_report(manifest, directory) -> Path:
    """report.html for a pipeline run: metrics, selected domains, stage timings and the CMC chart."""
    metrics = manifest.metrics
    chart = _create_cmc_chart(
        {"without adaptation": metrics["baseline"]["cmc"], "adapted": metrics["adapted"]["cmc"]}
    )
    path = write_html(
        Path(directory) / REPORT_FILE,
        "run_report.html.j2",
        manifest=manifest,
        metrics=metrics,
        stages=manifest.stages,
        chart=chart,
    )
    logging.info(f"run Wrote report {path}")
    return path


def render_ablation_report(report: dict, table: pd.DataFrame, directory) -> Path:
    """report.html for an ablation battery: rank-1 table and chart, selection-mode rows, failures."""
    path = write_html(
        Path(directory) / REPORT_FILE,
        "ablation_report.html.j2",
        report=report,
        table=table.reset_index().to_dict(orient="records"),
        seed_columns=[c for c in table.columns if c.startswith("seed ")],
        chart=_create_rank1_chart(table) if len(table) else "",
    )
    logging.info(f"ablation Wrote report {path}")
    return path
