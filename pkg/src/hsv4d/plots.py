"""SVG summary plots: per-metric trend panels and FHC curves.

Figures follow the study-report convention: subset-vs-ground-truth in blue
solid circles, subset-vs-fullset in yellow dash-dotted triangles,
cross-validation in green dotted squares, and a gray dashed horizontal line
for the fullset-vs-ground-truth baseline. MSE and DSSIM panels use a log
scale. Rendering is deterministic (fixed hash salt, no date metadata).
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .bootstrap import ComparisonKind
from .errors import DomainError
from .metrics4d import MetricKind, read_fhc_csv

matplotlib.rcParams["svg.hashsalt"] = "hsv4d"

_METRIC_LABELS = {
    MetricKind.MSE: ("MSE", True),
    MetricKind.DSSIM: ("DSSIM", True),
    MetricKind.FHC_RESOLUTION: ("FHC resolution", False),
    MetricKind.PSNR: ("PSNR (dB)", False),
    MetricKind.NCC: ("NCC", False),
    MetricKind.NMI: ("NMI", False),
}

_SERIES_STYLE = {
    "subset_vs_ground_truth": dict(
        color="tab:blue", linestyle="-", marker="o", label="subset vs ground truth"
    ),
    "subset_vs_fullset": dict(
        color="tab:orange", linestyle="-.", marker="^", label="subset vs fullset"
    ),
    "cross_validation": dict(
        color="tab:green", linestyle=":", marker="s", label="cross-validation"
    ),
}


def _savefig(fig, path) -> str:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return str(path)


def plot_summary(result, config) -> list[str]:
    """Render the six-panel trend figure and the FHC curve figure."""
    summary = result.summary
    baseline = result.baseline
    levels = sorted({cell.level for cell in summary.cells})
    if not levels:
        raise DomainError("empty summary: nothing to plot")
    cv_kind = ComparisonKind.cross_validation(config.interlaced).value

    fig, axes = plt.subplots(2, 3, figsize=(13, 7.5))
    for ax, metric in zip(axes.ravel(), _METRIC_LABELS):
        label, log_scale = _METRIC_LABELS[metric]
        for kind, style in (
            (ComparisonKind.SUBSET_VS_GROUND_TRUTH.value, _SERIES_STYLE["subset_vs_ground_truth"]),
            (ComparisonKind.SUBSET_VS_FULLSET.value, _SERIES_STYLE["subset_vs_fullset"]),
            (cv_kind, _SERIES_STYLE["cross_validation"]),
        ):
            xs, means, stds = [], [], []
            for level in levels:
                try:
                    cell = summary.get(kind, level, metric.value)
                except KeyError:
                    continue
                if math.isnan(cell.mean):
                    continue
                xs.append(level)
                means.append(cell.mean)
                stds.append(0.0 if math.isnan(cell.std) else cell.std)
            if xs:
                ax.errorbar(xs, means, yerr=stds, capsize=3, **style)
        base_value = baseline.value(metric)
        if math.isfinite(base_value):
            ax.axhline(
                base_value, color="gray", linestyle="--", label="fullset vs ground truth"
            )
        if log_scale:
            ax.set_yscale("log")
        ax.set_title(label)
        ax.set_xlabel(
            "projections per subset" if config.regime == "sparse" else "experiments per subset"
        )
        ax.set_xticks(levels)
    handles, labels = axes[0, 0].get_legend_handles_labels()
    fig.legend(handles, labels, loc="lower center", ncol=4, frameon=False)
    fig.tight_layout(rect=(0, 0.06, 1, 1))
    summary_path = _savefig(fig, Path(result.out_dir) / "plots" / "summary.svg")

    fig, ax = plt.subplots(figsize=(7, 5))
    for csv_path in result.fhc_csvs:
        curve = read_fhc_csv(csv_path)
        name = Path(csv_path).stem.replace("fhc_", "")
        ax.plot(curve.shell_centers, curve.correlations, marker=".", label=name)
    curve = read_fhc_csv(result.fhc_csvs[0])
    ax.plot(
        curve.shell_centers,
        curve.thresholds,
        color="black",
        linestyle="--",
        label="half-bit threshold",
    )
    ax.set_xlabel("spatial-temporal frequency / Nyquist")
    ax.set_ylabel("hypershell correlation")
    ax.set_ylim(-0.1, 1.05)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fhc_path = _savefig(fig, Path(result.out_dir) / "plots" / "fhc.svg")

    return [summary_path, fhc_path]
