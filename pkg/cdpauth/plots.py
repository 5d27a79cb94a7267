from __future__ import annotations

from typing import Sequence

import numpy as np
from matplotlib.figure import Figure

from .evaluation import EvalReport, RocCurve, StabilityPoint

ROC_METRICS = ("LLS", "M-LLS", "HAMM", "M-HAMM")
LOG_FLOOR = 1e-3


def _draw_roc(axis, curves: dict[str, RocCurve], log_scale: bool) -> None:
    for label, curve in curves.items():
        if log_scale:
            axis.loglog(np.maximum(curve.fpr, LOG_FLOOR), np.maximum(curve.tpr, LOG_FLOOR), label=f"f {label}", linewidth=1.0)
        else:
            axis.plot(curve.fpr, curve.tpr, label=f"f {label}", linewidth=1.0)

    if log_scale:
        axis.set_xlim(LOG_FLOOR, 1.0)
        axis.set_ylim(LOG_FLOOR, 1.05)
    else:
        axis.plot([0.0, 1.0], [0.0, 1.0], color="grey", linestyle=":", linewidth=0.8)
        axis.set_xlim(0.0, 1.0)
        axis.set_ylim(0.0, 1.02)

    axis.set_xlabel("FPR")
    axis.grid(True, which="both", linewidth=0.3)


def roc_figure(report: EvalReport, printer: str, border_mode: str = None, metrics: Sequence[str] = ROC_METRICS) -> Figure:
    """One column per metric with the ROC curves of every fake type against the printer's originals; the top row is linear, the bottom row log-log."""
    border_mode = border_mode or report.config.border_modes[0]
    metrics = [metric for metric in metrics if metric in report.config.metrics]

    figure = Figure(figsize=(3.2 * max(len(metrics), 1), 6.4))
    axes = figure.subplots(2, max(len(metrics), 1), squeeze=False)

    for column, metric in enumerate(metrics):
        curves = {fake.label: report.rocs[(border_mode, printer, fake.label, metric)] for fake in report.config.fake_grid
                  if (border_mode, printer, fake.label, metric) in report.rocs}
        for row, log_scale in enumerate((False, True)):
            _draw_roc(axes[row][column], curves, log_scale)

        axes[0][column].set_title(f"{metric} (printer {printer})")
        axes[0][column].legend(loc="lower right", fontsize="small")

    axes[0][0].set_ylabel("TPR")
    axes[1][0].set_ylabel("TPR (log)")
    figure.tight_layout()
    return figure


def stability_figure(curve: Sequence[StabilityPoint], printer: str = None) -> Figure:
    """Mean ℓ1-distance to the reference codebook against training set size, with one standard deviation as error bars."""
    figure = Figure(figsize=(6.0, 4.0))
    axis = figure.subplots()

    axis.errorbar([point.size for point in curve], [point.mean_d1 for point in curve], yerr=[point.std_d1 for point in curve], marker="o", capsize=3, linewidth=1.0)
    axis.set_xscale("log")
    axis.set_xlabel("training pairs")
    axis.set_ylabel("mean ℓ1 distance to reference")
    axis.set_title("Codebook stability" if printer is None else f"Codebook stability (printer {printer})")
    axis.grid(True, which="both", linewidth=0.3)
    figure.tight_layout()
    return figure
