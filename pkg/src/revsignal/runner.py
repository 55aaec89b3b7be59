"""Experiment orchestration: the feature-set sweep (rq1), feature selection
(rq2), and the timeframe analysis (rq3).

Every sweep cell derives its own seed from the master seed and the cell
coordinates, so adding or removing cells never shifts the randomness of the
others, and cells can run in a worker pool with deterministic results.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus, FilterConfig, filter_corpus, load_corpus
from .dataset import (
    SECONDS_PER_MONTH,
    InsufficientSpan,
    SamplingConfig,
    TrainingExample,
    WindowSpec,
    build_examples,
    feedback_subset,
    undersample,
)
from .features import FEATURE_NAMES, FEATURE_SETS
from .learners import (
    ModelSpec,
    grid_search,
    labels_from_examples,
    matrix_from_examples,
    train,
)
from .metrics import classification_report, regression_report
from .selection import ImportanceReport, RFEResult, importance, rfe
from .timeline import TemporalIndex, build_index

DEFAULT_RATES = (0.05, 0.10, 0.15, 0.20, 0.25, 0.50)
DEFAULT_FEATURE_SETS = ("LOC", "FR", "CO", "WL", "TR", "PROPOSED", "ALL")
DEFAULT_ALGORITHMS = {
    "participation": ("random_forest_clf", "linear_svc", "logistic_regression"),
    "feedback": ("knn_reg", "linear_reg", "random_forest_reg"),
}
REPORT_COLUMNS = (
    "task",
    "feature_set",
    "algorithm",
    "rate",
    "timeframe_months",
    "period",
    "precision",
    "recall",
    "f1",
    "auprc",
    "rmse",
    "pearson_r",
    "r2",
    "hyperparameters",
    "seconds",
    "seed",
    "error",
)


class PlanError(Exception):
    pass


class MissingRQ1Report(PlanError):
    pass


def derive_seed(master: int, *coords) -> int:
    """Stable per-cell seed from the master seed and cell coordinates."""
    key = "|".join([str(master), *map(str, coords)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") % (2**63)


@dataclass(frozen=True)
class ExperimentPlan:
    reviews_path: str
    org_path: str
    modules_path: str
    out_dir: str | None = None
    seed: int = 0
    tasks: tuple[str, ...] = ("participation", "feedback")
    feature_sets: tuple[str, ...] = DEFAULT_FEATURE_SETS
    algorithms: dict[str, tuple[str, ...]] = field(
        default_factory=lambda: {k: v for k, v in DEFAULT_ALGORITHMS.items()}
    )
    rates: tuple[float, ...] = DEFAULT_RATES
    timeframe_months: int = 12
    n_periods: int = 1
    period_months: int = 3
    timeframes: tuple[int, ...] = (3, 6, 9, 12)
    rq3_periods: int = 5
    filter: FilterConfig = field(default_factory=FilterConfig)
    grids: dict[str, list[dict]] = field(default_factory=dict)
    rfe_folds: int = 3
    jobs: int = 1
    include_nonparticipants: bool = False
    rq2_overrides: dict[str, dict] = field(default_factory=dict)

    def __post_init__(self):
        if not self.tasks:
            raise PlanError("plan has no tasks")
        for task in self.tasks:
            if task not in ("participation", "feedback"):
                raise PlanError(f"unknown task {task!r}")
            if task not in self.algorithms or not self.algorithms[task]:
                raise PlanError(f"no algorithms configured for task {task!r}")
        if not self.feature_sets:
            raise PlanError("plan has no feature sets")
        for fs in self.feature_sets:
            if fs not in FEATURE_SETS:
                raise PlanError(f"unknown feature set {fs!r}")
        if "participation" in self.tasks and not self.rates:
            raise PlanError("participation sweeps need at least one sampling rate")
        for rate in self.rates:
            if not (0 < rate <= 1):
                raise PlanError(f"sampling rate {rate} outside (0, 1]")

    def grid_for(self, family: str) -> list[dict] | None:
        return self.grids.get(family)


_PLAN_KEYS = {
    "corpus_dir",
    "reviews",
    "org",
    "modules",
    "out",
    "seed",
    "tasks",
    "feature_sets",
    "algorithms",
    "rates",
    "window",
    "timeframes",
    "rq3_periods",
    "filter",
    "grids",
    "rfe_folds",
    "jobs",
    "include_nonparticipants",
    "rq2",
}


def load_plan(config_path: str | Path, corpus_dir_env: str | None = None, **overrides) -> ExperimentPlan:
    """Build a plan from a JSON config file; malformed plans raise PlanError."""
    try:
        with open(config_path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise PlanError(f"cannot read plan config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PlanError(f"plan config is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise PlanError("plan config must be a JSON object")
    unknown = set(obj) - _PLAN_KEYS
    if unknown:
        raise PlanError(f"unknown plan keys: {sorted(unknown)}")
    return plan_from_dict(obj, corpus_dir_env=corpus_dir_env, **overrides)


def plan_from_dict(obj: dict, corpus_dir_env: str | None = None, **overrides) -> ExperimentPlan:
    corpus_dir = obj.get("corpus_dir") or corpus_dir_env
    if "reviews" in obj and "org" in obj and "modules" in obj:
        paths = (obj["reviews"], obj["org"], obj["modules"])
    elif corpus_dir:
        base = Path(corpus_dir)
        paths = (str(base / "reviews.ndjson"), str(base / "org.ndjson"), str(base / "modules.ndjson"))
    else:
        raise PlanError("plan must name the corpus files or a corpus_dir")

    window = obj.get("window", {})
    filt = obj.get("filter", {})
    try:
        filter_config = FilterConfig(
            max_loc=int(filt.get("max_loc", 5000)),
            max_duration=int(float(filt.get("max_duration_days", 30)) * 86_400),
            keep_bots=bool(filt.get("keep_bots", False)),
        )
        algorithms = {
            task: tuple(algos)
            for task, algos in obj.get("algorithms", {k: list(v) for k, v in DEFAULT_ALGORITHMS.items()}).items()
        }
        plan = ExperimentPlan(
            reviews_path=paths[0],
            org_path=paths[1],
            modules_path=paths[2],
            out_dir=obj.get("out"),
            seed=int(obj.get("seed", 0)),
            tasks=tuple(obj.get("tasks", ("participation", "feedback"))),
            feature_sets=tuple(obj.get("feature_sets", DEFAULT_FEATURE_SETS)),
            algorithms=algorithms,
            rates=tuple(float(r) for r in obj.get("rates", DEFAULT_RATES)),
            timeframe_months=int(window.get("timeframe_months", 12)),
            n_periods=int(window.get("n_periods", 1)),
            period_months=int(window.get("period_months", 3)),
            timeframes=tuple(int(t) for t in obj.get("timeframes", (3, 6, 9, 12))),
            rq3_periods=int(obj.get("rq3_periods", 5)),
            filter=filter_config,
            grids={k: list(v) for k, v in obj.get("grids", {}).items()},
            rfe_folds=int(obj.get("rfe_folds", 3)),
            jobs=int(obj.get("jobs", 1)),
            include_nonparticipants=bool(obj.get("include_nonparticipants", False)),
            rq2_overrides=dict(obj.get("rq2", {})),
        )
    except (TypeError, ValueError) as exc:
        raise PlanError(f"malformed plan: {exc}") from exc
    if overrides:
        plan = replace(plan, **overrides)
    return plan


def prepare_corpus(plan: ExperimentPlan) -> tuple[Corpus, TemporalIndex]:
    corpus = load_corpus(plan.reviews_path, plan.org_path, plan.modules_path)
    filtered = filter_corpus(corpus, plan.filter)
    return filtered, build_index(filtered)


# ---------------------------------------------------------------------------
# Reports


@dataclass
class ExperimentReport:
    name: str
    columns: tuple[str, ...]
    rows: list[dict]

    def to_json_obj(self) -> dict:
        return {"name": self.name, "columns": list(self.columns), "rows": self.rows}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ExperimentReport":
        return cls(name=obj["name"], columns=tuple(obj["columns"]), rows=list(obj["rows"]))


def _base_row(**values) -> dict:
    row = {c: None for c in REPORT_COLUMNS}
    row.update(values)
    return row


# ---------------------------------------------------------------------------
# Window preparation


@dataclass
class WindowData:
    """Examples for one window, with the validation tail split out."""

    window: WindowSpec
    train: list[TrainingExample]
    sub_train: list[TrainingExample]
    validation: list[TrainingExample]
    test: list[TrainingExample]


def prepare_window(corpus: Corpus, index: TemporalIndex, window: WindowSpec, period_months: int) -> WindowData:
    train = build_examples(corpus, index, window, "train")
    test = build_examples(corpus, index, window, "test")
    val_start = window.train_end - period_months * SECONDS_PER_MONTH
    if val_start <= window.train_start:
        # tail would swallow the whole window: fall back to its second half
        val_start = (window.train_start + window.train_end) // 2
    created = {r.review_id: r.created_at for r in corpus.reviews}
    sub_train = [ex for ex in train if created[ex.review_id] < val_start]
    validation = [ex for ex in train if created[ex.review_id] >= val_start]
    return WindowData(window=window, train=train, sub_train=sub_train, validation=validation, test=test)


def _evaluate_cell(
    plan: ExperimentPlan,
    data: WindowData,
    task: str,
    feature_set: str,
    family: str,
    rate: float | None,
    cell_seed: int,
    spec_override: ModelSpec | None = None,
) -> dict:
    """Train/evaluate one sweep cell; returns the metric fields of its row."""
    columns = FEATURE_SETS[feature_set].fields

    if task == "participation":
        sub_train, validation, full_train, test = data.sub_train, data.validation, data.train, data.test
        cfg = SamplingConfig(rate=rate, seed=cell_seed)
        sub_train = undersample(sub_train, cfg)
        full_train = undersample(full_train, cfg)
        scoring = "F1"
    else:
        sub_train = feedback_subset(data.sub_train, plan.include_nonparticipants)
        validation = feedback_subset(data.validation, plan.include_nonparticipants)
        full_train = feedback_subset(data.train, plan.include_nonparticipants)
        test = feedback_subset(data.test, plan.include_nonparticipants)
        scoring = "R2"

    X_sub = matrix_from_examples(sub_train, columns)
    y_sub = labels_from_examples(sub_train, task)
    X_val = matrix_from_examples(validation, columns)
    y_val = labels_from_examples(validation, task)

    if spec_override is not None:
        spec = replace(spec_override, seed=cell_seed)
    else:
        spec = grid_search(
            family, plan.grid_for(family), X_sub, y_sub, X_val, y_val, scoring, seed=cell_seed
        )

    X_train = matrix_from_examples(full_train, columns)
    y_train = labels_from_examples(full_train, task)
    model = train(spec, X_train, y_train)

    X_test = matrix_from_examples(test, columns)
    y_test = labels_from_examples(test, task)
    out: dict = {"hyperparameters": spec.params}
    if task == "participation":
        report = classification_report(y_test, model.predict_labels(X_test), model.predict_scores(X_test))
        out.update(precision=report.precision, recall=report.recall, f1=report.f1, auprc=report.auprc)
    else:
        report = regression_report(y_test, model.predict_values(X_test))
        out.update(rmse=report.rmse, pearson_r=report.pearson_r, r2=report.r2)
    return out


def _run_cells(cells: list[tuple[dict, Callable[[], dict]]], jobs: int) -> list[dict]:
    """Execute sweep cells (optionally in a thread pool) in plan order.

    Each cell is (base row, thunk); failures land in the row's error field.
    """

    def run(cell):
        base, thunk = cell
        row = dict(base)
        started = time.perf_counter()
        try:
            row.update(thunk())
        except Exception as exc:  # noqa: BLE001 - per-cell failures are recorded
            row["error"] = f"{type(exc).__name__}: {exc}"
        row["seconds"] = time.perf_counter() - started
        return row

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, cells))
    return [run(cell) for cell in cells]


# ---------------------------------------------------------------------------
# RQ1: feature-set x algorithm x sampling-rate sweep


def run_rq1(plan: ExperimentPlan, corpus: Corpus, index: TemporalIndex) -> ExperimentReport:
    windows = _rq1_windows(corpus, plan)
    data = prepare_window(corpus, index, windows[0], plan.period_months)

    cells: list[tuple[dict, Callable[[], dict]]] = []
    for task in plan.tasks:
        rates: Sequence[float | None] = plan.rates if task == "participation" else (None,)
        for feature_set in plan.feature_sets:
            for family in plan.algorithms[task]:
                for rate in rates:
                    cell_seed = derive_seed(plan.seed, "rq1", task, feature_set, family, rate)
                    base = _base_row(
                        task=task,
                        feature_set=feature_set,
                        algorithm=family,
                        rate=rate,
                        seed=cell_seed,
                    )
                    thunk = (
                        lambda t=task, fs=feature_set, fam=family, r=rate, s=cell_seed: _evaluate_cell(
                            plan, data, t, fs, fam, r, s
                        )
                    )
                    cells.append((base, thunk))

    rows = _run_cells(cells, plan.jobs)
    return ExperimentReport(name="rq1", columns=REPORT_COLUMNS, rows=rows)


def _rq1_windows(corpus: Corpus, plan: ExperimentPlan) -> list[WindowSpec]:
    from .dataset import make_windows

    windows = make_windows(corpus.span(), plan.timeframe_months, max(1, plan.n_periods), plan.period_months)
    if not windows:
        raise InsufficientSpan("plan produced no windows")
    return windows


def best_configuration(report: ExperimentReport, task: str) -> dict:
    """Winning (algorithm, rate, hyperparameters) by F1 / R2 from an rq1 report."""
    best_row = None
    best_score = float("-inf")
    for row in report.rows:
        if row.get("task") != task or row.get("error"):
            continue
        score = row.get("f1") if task == "participation" else row.get("r2")
        if score is not None and score > best_score:
            best_score = score
            best_row = row
    if best_row is None:
        raise MissingRQ1Report(f"rq1 report has no successful {task} rows")
    return {
        "algorithm": best_row["algorithm"],
        "rate": best_row["rate"],
        "hyperparameters": dict(best_row["hyperparameters"] or {}),
        "score": best_score,
    }


# ---------------------------------------------------------------------------
# RQ2: recursive feature elimination + importance measures


def _rfe_folds(
    corpus: Corpus,
    index: TemporalIndex,
    window: WindowSpec,
    n_folds: int,
    period_months: int,
    task: str,
    rate: float | None,
    seed: int,
    include_nonparticipants: bool,
):
    """Expanding walk-forward folds inside the training window only."""
    period = period_months * SECONDS_PER_MONTH
    first_val = window.train_end - n_folds * period
    if first_val <= window.train_start:
        raise InsufficientSpan(
            f"training window too short for {n_folds} folds of {period_months} months"
        )
    folds = []
    for i in range(n_folds):
        val_start = first_val + i * period
        fold_window = WindowSpec(window.train_start, val_start, val_start, val_start + period)
        train_ex = build_examples(corpus, index, fold_window, "train")
        val_ex = build_examples(corpus, index, fold_window, "test")
        if task == "participation":
            train_ex = undersample(train_ex, SamplingConfig(rate=rate, seed=derive_seed(seed, "fold", i)))
        else:
            train_ex = feedback_subset(train_ex, include_nonparticipants)
            val_ex = feedback_subset(val_ex, include_nonparticipants)
        X_tr = matrix_from_examples(train_ex, FEATURE_NAMES)
        y_tr = labels_from_examples(train_ex, task)
        X_va = matrix_from_examples(val_ex, FEATURE_NAMES)
        y_va = labels_from_examples(val_ex, task)
        folds.append(((X_tr, y_tr), (X_va, y_va)))
    return folds


def run_rq2(
    plan: ExperimentPlan,
    corpus: Corpus,
    index: TemporalIndex,
    rq1_report: ExperimentReport | None,
) -> dict[str, tuple[RFEResult, ImportanceReport]]:
    windows = _rq1_windows(corpus, plan)
    window = windows[0]
    results: dict[str, tuple[RFEResult, ImportanceReport]] = {}
    for task in plan.tasks:
        if task in plan.rq2_overrides:
            chosen = dict(plan.rq2_overrides[task])
            chosen.setdefault("hyperparameters", {})
            chosen.setdefault("rate", plan.rates[0] if plan.rates else None)
        elif rq1_report is not None:
            chosen = best_configuration(rq1_report, task)
        else:
            raise MissingRQ1Report(f"no rq1 report and no rq2 override for task {task!r}")

        family = chosen["algorithm"]
        rate = chosen.get("rate")
        seed = derive_seed(plan.seed, "rq2", task)
        scoring = "F1" if task == "participation" else "R2"
        folds = _rfe_folds(
            corpus,
            index,
            window,
            plan.rfe_folds,
            plan.period_months,
            task,
            rate,
            seed,
            plan.include_nonparticipants,
        )
        rfe_result = rfe(family, [chosen["hyperparameters"]], folds, scoring, seed=seed, n_jobs=plan.jobs)

        train_ex = build_examples(corpus, index, window, "train")
        if task == "participation":
            train_ex = undersample(train_ex, SamplingConfig(rate=rate, seed=seed))
        else:
            train_ex = feedback_subset(train_ex, plan.include_nonparticipants)
        imp = importance(train_ex, task, seed=seed, n_jobs=plan.jobs)
        results[task] = (rfe_result, imp)
    return results


# ---------------------------------------------------------------------------
# RQ3: timeframe sweep on aligned test periods


def run_rq3(
    plan: ExperimentPlan,
    corpus: Corpus,
    index: TemporalIndex,
    rq1_report: ExperimentReport | None,
    selected_features: dict[str, tuple[str, ...]] | None = None,
) -> ExperimentReport:
    from .dataset import make_windows

    span = corpus.span()
    anchor = span[0] + max(plan.timeframes) * SECONDS_PER_MONTH
    selected_features = selected_features or {}

    cells: list[tuple[dict, Callable[[], dict]]] = []
    window_cache: dict[tuple[int, int], WindowData] = {}

    for task in plan.tasks:
        if task in plan.rq2_overrides and "algorithm" in plan.rq2_overrides[task]:
            chosen = dict(plan.rq2_overrides[task])
            chosen.setdefault("hyperparameters", {})
            chosen.setdefault("rate", plan.rates[0] if plan.rates else None)
        elif rq1_report is not None:
            chosen = best_configuration(rq1_report, task)
        else:
            raise MissingRQ1Report(f"no rq1 report and no override for task {task!r}")
        family = chosen["algorithm"]
        rate = chosen.get("rate")
        features = selected_features.get(task) or FEATURE_SETS["ALL"].fields
        feature_set = _register_feature_set(task, features)

        for timeframe in plan.timeframes:
            windows = make_windows(span, timeframe, plan.rq3_periods, plan.period_months, first_test_start=anchor)
            for k, window in enumerate(windows):
                cell_seed = derive_seed(plan.seed, "rq3", task, timeframe, k)
                base = _base_row(
                    task=task,
                    feature_set=feature_set,
                    algorithm=family,
                    rate=rate if task == "participation" else None,
                    timeframe_months=timeframe,
                    period=k + 1,
                    seed=cell_seed,
                )
                spec = ModelSpec.make(family, chosen["hyperparameters"], seed=cell_seed)

                def thunk(t=task, fs=feature_set, fam=family, r=rate, s=cell_seed, w=window, sp=spec, tf=timeframe):
                    key = (tf, w.test_start)
                    if key not in window_cache:
                        window_cache[key] = prepare_window(corpus, index, w, plan.period_months)
                    return _evaluate_cell(plan, window_cache[key], t, fs, fam, r, s, spec_override=sp)

                cells.append((base, thunk))

    rows = _run_cells(cells, plan.jobs)
    return ExperimentReport(name="rq3", columns=REPORT_COLUMNS, rows=rows)


def _register_feature_set(task: str, features: tuple[str, ...]) -> str:
    """Expose an ad-hoc feature subset (e.g. RQ2 selection) as a named set."""
    from .features import FeatureSetSelector

    canonical = tuple(name for name in FEATURE_NAMES if name in set(features))
    for name, selector in FEATURE_SETS.items():
        if selector.fields == canonical:
            return name
    name = f"SELECTED_{task.upper()}"
    FEATURE_SETS[name] = FeatureSetSelector(name, canonical)
    return name
