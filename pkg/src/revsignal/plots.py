"""Figure rendering for experiment reports (written next to the tables)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .runner import ExperimentReport
from .selection import ImportanceReport, RFEResult

_MARKERS = ("o", "s", "^", "v", "D", "P", "X")


def _ok_rows(report: ExperimentReport, task: str) -> list[dict]:
    return [r for r in report.rows if r.get("task") == task and not r.get("error")]


def render_rq1_participation(report: ExperimentReport, path: str | Path) -> bool:
    rows = _ok_rows(report, "participation")
    if not rows:
        return False
    algorithm = rows[0]["algorithm"]
    rows = [r for r in rows if r["algorithm"] == algorithm]
    feature_sets = sorted({r["feature_set"] for r in rows})

    fig, (ax_pr, ax_ap) = plt.subplots(1, 2, figsize=(11, 4.5))
    for i, fs in enumerate(feature_sets):
        sweep = sorted((r for r in rows if r["feature_set"] == fs), key=lambda r: r["rate"])
        rates = [r["rate"] for r in sweep]
        recalls = [r["recall"] for r in sweep]
        precisions = [r["precision"] for r in sweep]
        auprcs = [r["auprc"] for r in sweep]
        pr_pts = [(re, pr) for re, pr in zip(recalls, precisions) if re is not None and pr is not None]
        if pr_pts:
            ax_pr.plot(*zip(*pr_pts), marker=_MARKERS[i % len(_MARKERS)], label=fs)
        ap_pts = [(rate, ap) for rate, ap in zip(rates, auprcs) if ap is not None]
        if ap_pts:
            ax_ap.plot(*zip(*ap_pts), marker=_MARKERS[i % len(_MARKERS)], label=fs)
    ax_pr.set_xlabel("recall")
    ax_pr.set_ylabel("precision")
    ax_pr.set_title(f"precision/recall across sampling rates ({algorithm})")
    ax_pr.legend(fontsize=8)
    ax_ap.set_xlabel("undersampling rate")
    ax_ap.set_ylabel("AUPRC")
    ax_ap.set_title("AUPRC by sampling rate")
    ax_ap.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def render_rq1_feedback(report: ExperimentReport, path: str | Path) -> bool:
    rows = _ok_rows(report, "feedback")
    if not rows:
        return False
    algorithms = sorted({r["algorithm"] for r in rows})
    feature_sets = sorted({r["feature_set"] for r in rows})
    metrics = ("rmse", "pearson_r", "r2")

    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    x = np.arange(len(feature_sets))
    width = 0.8 / max(1, len(algorithms))
    for ax, metric in zip(axes, metrics):
        for j, algo in enumerate(algorithms):
            vals = []
            for fs in feature_sets:
                match = [r for r in rows if r["algorithm"] == algo and r["feature_set"] == fs]
                v = match[0].get(metric) if match else None
                vals.append(np.nan if v is None else v)
            ax.bar(x + j * width, vals, width=width, label=algo)
        ax.set_xticks(x + width * (len(algorithms) - 1) / 2)
        ax.set_xticklabels(feature_sets, rotation=45, ha="right", fontsize=8)
        ax.set_title(metric)
    axes[0].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def render_rfe(result: RFEResult, task: str, path: str | Path) -> bool:
    counts = [len(s.features) for s in result.steps]
    scores = [s.mean_score for s in result.steps]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(counts, scores, marker="o")
    ax.axvline(len(result.selected), color="grey", linestyle="--", linewidth=1)
    ax.set_xlabel("features kept")
    ax.set_ylabel("mean validation score")
    ax.set_title(f"recursive feature elimination ({task})")
    ax.invert_xaxis()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def render_importance(reports: dict[str, ImportanceReport], path: str | Path) -> bool:
    if not reports:
        return False
    any_report = next(iter(reports.values()))
    features = any_report.features
    panels = []
    part = reports.get("participation")
    if part is not None:
        panels += [
            ("information gain (bits)", part.information_gain),
            ("Gini importance", part.gini_importance),
            ("gain ratio", part.gain_ratio),
            ("chi-squared", part.chi_squared),
        ]
    feed = reports.get("feedback")
    if feed is not None:
        panels.append(("RReliefF", feed.rrelieff))

    fig, axes = plt.subplots(1, len(panels), figsize=(3.2 * len(panels), 4.5), sharey=True)
    if len(panels) == 1:
        axes = [axes]
    y = np.arange(len(features))
    for ax, (title, values) in zip(axes, panels):
        ax.barh(y, values)
        ax.set_title(title, fontsize=9)
    axes[0].set_yticks(y)
    axes[0].set_yticklabels(features, fontsize=8)
    axes[0].invert_yaxis()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def render_rq3(report: ExperimentReport, task: str, path: str | Path) -> bool:
    rows = _ok_rows(report, task)
    if not rows:
        return False
    metrics = ("precision", "recall", "f1", "auprc") if task == "participation" else ("rmse", "pearson_r", "r2")
    timeframes = sorted({r["timeframe_months"] for r in rows})

    fig, axes = plt.subplots(1, len(metrics), figsize=(3.4 * len(metrics), 4))
    for ax, metric in zip(axes, metrics):
        for i, tf in enumerate(timeframes):
            pts = sorted(
                ((r["period"], r[metric]) for r in rows if r["timeframe_months"] == tf and r[metric] is not None),
            )
            if pts:
                ax.plot(*zip(*pts), marker=_MARKERS[i % len(_MARKERS)], label=f"{tf} mo")
        ax.set_xlabel("period")
        ax.set_title(metric)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True
