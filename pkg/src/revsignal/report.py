"""Report serialization: delimited tables, aligned text, and JSON."""

from __future__ import annotations

import json
from pathlib import Path

from .metrics import fmt_metric
from .runner import ExperimentReport
from .selection import ImportanceReport, RFEResult

_FLOAT_COLUMNS = {"precision", "recall", "f1", "auprc", "rmse", "pearson_r", "r2", "rate"}


def format_cell(column: str, value) -> str:
    if value is None:
        return "-"
    if column == "seconds":
        return f"{value:.2f}"
    if column in _FLOAT_COLUMNS and isinstance(value, float):
        return fmt_metric(value)
    if isinstance(value, dict):
        return json.dumps(value, sort_keys=True) if value else "{}"
    if isinstance(value, float):
        return fmt_metric(value)
    return str(value)


def _formatted_rows(report: ExperimentReport) -> list[list[str]]:
    return [[format_cell(c, row.get(c)) for c in report.columns] for row in report.rows]


def write_tsv(report: ExperimentReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(report.columns) + "\n")
        for cells in _formatted_rows(report):
            fh.write("\t".join(cells) + "\n")


def write_aligned(report: ExperimentReport, path: str | Path) -> None:
    rows = [list(report.columns)] + _formatted_rows(report)
    widths = [max(len(r[i]) for r in rows) for i in range(len(report.columns))]
    with open(path, "w", encoding="utf-8") as fh:
        for i, row in enumerate(rows):
            fh.write("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() + "\n")
            if i == 0:
                fh.write("  ".join("-" * w for w in widths) + "\n")


def write_json(report: ExperimentReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_obj(), fh, indent=1)


def read_json(path: str | Path) -> ExperimentReport:
    with open(path, encoding="utf-8") as fh:
        return ExperimentReport.from_json_obj(json.load(fh))


def write_report(report: ExperimentReport, out_dir: str | Path, stem: str | None = None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or report.name
    paths = [out / f"{stem}.tsv", out / f"{stem}.txt", out / f"{stem}.json"]
    write_tsv(report, paths[0])
    write_aligned(report, paths[1])
    write_json(report, paths[2])
    return paths


# ---------------------------------------------------------------------------
# Selection outputs (Table-6-style importance layout and RFE traces)

IMPORTANCE_MEASURES = ("information_gain", "gini_importance", "gain_ratio", "chi_squared", "rrelieff")


def importance_table(reports: dict[str, ImportanceReport]) -> ExperimentReport:
    """One row per feature; participation carries the four classical
    measures, feedback contributes the RReliefF column."""
    part = reports.get("participation")
    feed = reports.get("feedback")
    any_report = part or feed
    columns = ("feature", "information_gain", "gini_importance", "gain_ratio", "chi_squared", "rrelieff")
    rows = []
    for feature in any_report.features:
        source = part or feed
        row = {"feature": feature}
        row["information_gain"] = source.row(feature)["information_gain"]
        row["gini_importance"] = source.row(feature)["gini_importance"]
        row["gain_ratio"] = source.row(feature)["gain_ratio"]
        row["chi_squared"] = source.row(feature)["chi_squared"]
        relief_source = feed or part
        row["rrelieff"] = relief_source.row(feature)["rrelieff"]
        rows.append(row)
    return ExperimentReport(name="importance", columns=columns, rows=rows)


def rfe_table(result: RFEResult, task: str) -> ExperimentReport:
    columns = ("task", "n_features", "mean_score", "removed", "features")
    rows = [
        {
            "task": task,
            "n_features": len(step.features),
            "mean_score": step.mean_score,
            "removed": step.removed,
            "features": ",".join(step.features),
        }
        for step in result.steps
    ]
    return ExperimentReport(name=f"rfe_{task}", columns=columns, rows=rows)


def rq2_summary(results: dict) -> dict:
    """JSON-ready summary of the selection run (consumed by rq3)."""
    return {
        task: {
            "selected": list(rfe_result.selected),
            "winning_score": rfe_result.winning_score,
            "eliminated": [f for f in rfe_result.steps[0].features if f not in rfe_result.selected],
        }
        for task, (rfe_result, _imp) in results.items()
    }
