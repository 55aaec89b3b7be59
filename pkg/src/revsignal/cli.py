"""Command-line interface.

Exit codes: 0 success, 1 corpus validation failure, 2 plan/configuration
errors. REVSIGNAL_CORPUS_DIR supplies the default corpus directory.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import report as report_mod
from .corpus import CorpusError, FilterConfig, filter_corpus, load_corpus, save_corpus
from .dataset import (
    SamplingConfig,
    TrainingExample,
    feedback_subset,
    make_windows,
    undersample,
)
from .features import FEATURE_NAMES, FEATURE_SETS, FeatureVector, get_selector
from .learners import (
    Matrix,
    ModelSpec,
    labels_from_examples,
    load_model,
    matrix_from_examples,
    save_model,
    train,
)
from .metrics import classification_report, fmt_metric, regression_report
from .runner import (
    ExperimentPlan,
    MissingRQ1Report,
    PlanError,
    load_plan,
    prepare_corpus,
    run_rq1,
    run_rq2,
    run_rq3,
)
from .synth import SynthConfig, generate, save_ground_truth
from .timeline import build_index

ENV_CORPUS_DIR = "REVSIGNAL_CORPUS_DIR"


def _corpus_paths(args) -> tuple[str, str, str]:
    if args.reviews and args.org and args.modules:
        return args.reviews, args.org, args.modules
    base = args.corpus_dir or os.environ.get(ENV_CORPUS_DIR)
    if not base:
        raise PlanError(
            "corpus not specified: pass --reviews/--org/--modules, --corpus-dir, "
            f"or set {ENV_CORPUS_DIR}"
        )
    base = Path(base)
    return (str(base / "reviews.ndjson"), str(base / "org.ndjson"), str(base / "modules.ndjson"))


def _add_corpus_args(parser):
    parser.add_argument("--reviews", help="reviews .ndjson file")
    parser.add_argument("--org", help="org assignments .ndjson file")
    parser.add_argument("--modules", help="modules .ndjson file")
    parser.add_argument("--corpus-dir", help=f"directory with the three files (default ${ENV_CORPUS_DIR})")


def _add_filter_args(parser):
    parser.add_argument("--max-loc", type=int, default=5000, help="drop changes above this LOC (default 5000)")
    parser.add_argument(
        "--max-duration-days", type=float, default=30.0, help="drop closed reviews older than this (default 30)"
    )
    parser.add_argument("--keep-bots", action="store_true", help="keep bot reviews and comments")


def _filter_config(args) -> FilterConfig:
    return FilterConfig(
        max_loc=args.max_loc,
        max_duration=int(args.max_duration_days * 86_400),
        keep_bots=args.keep_bots,
    )


def _load_filtered(args):
    corpus = load_corpus(*_corpus_paths(args))
    return filter_corpus(corpus, _filter_config(args))


# ---------------------------------------------------------------------------
# Example/matrix files (TSV)

_LABEL_COLUMNS = ("participated", "comment_count", "log_feedback")


def write_examples_tsv(examples, path, with_labels: bool = True):
    out = sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8")
    try:
        header = ["review_id", "candidate_id", *FEATURE_NAMES]
        if with_labels:
            header += list(_LABEL_COLUMNS)
        out.write("\t".join(header) + "\n")
        for ex in examples:
            row = [ex.review_id, ex.candidate_id]
            row += [repr(v) for v in ex.features.as_tuple()]
            if with_labels:
                row += [str(int(ex.participated)), str(ex.comment_count), repr(ex.log_feedback)]
            out.write("\t".join(row) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


def read_examples_tsv(path) -> list[TrainingExample]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        missing = [c for c in ("review_id", "candidate_id", *FEATURE_NAMES) if c not in header]
        if missing:
            raise PlanError(f"examples file lacks columns: {missing}")
        col = {name: i for i, name in enumerate(header)}
        labeled = all(c in col for c in _LABEL_COLUMNS)
        examples = []
        for line in fh:
            cells = line.rstrip("\n").split("\t")
            fv = FeatureVector(**{name: float(cells[col[name]]) for name in FEATURE_NAMES})
            if labeled:
                participated = cells[col["participated"]] == "1"
                count = int(cells[col["comment_count"]])
                log_feedback = float(cells[col["log_feedback"]])
            else:
                participated, count, log_feedback = False, 0, 0.0
            examples.append(
                TrainingExample(
                    review_id=cells[col["review_id"]],
                    candidate_id=cells[col["candidate_id"]],
                    features=fv,
                    participated=participated,
                    comment_count=count,
                    log_feedback=log_feedback,
                )
            )
    return examples


# ---------------------------------------------------------------------------
# Subcommands


def cmd_validate(args) -> int:
    corpus = load_corpus(*_corpus_paths(args))
    print(f"valid corpus: {len(corpus.reviews)} reviews, {len(corpus.assignments)} assignments, {len(corpus.modules)} modules")
    return 0


def cmd_filter(args) -> int:
    filtered = _load_filtered(args)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(filtered, out / "reviews.ndjson", out / "org.ndjson", out / "modules.ndjson")
    print(f"filtered corpus: {len(filtered.reviews)} reviews kept; written to {out}")
    return 0


def _window_from_args(args, corpus):
    windows = make_windows(
        corpus.span(), args.timeframe, args.n_periods, args.period_months
    )
    if args.window >= len(windows):
        raise PlanError(f"--window {args.window} out of range (have {len(windows)})")
    return windows[args.window]


def cmd_featurize(args) -> int:
    corpus = _load_filtered(args)
    index = build_index(corpus)
    from .dataset import build_examples, candidate_pool, _example_for  # noqa: F401

    examples = []
    for review in corpus.reviews:
        for cand in sorted(candidate_pool(index, review)):
            examples.append(_example_for(index, review, cand, args.window_start))
    write_examples_tsv(examples, args.out, with_labels=False)
    return 0


def cmd_examples(args) -> int:
    corpus = _load_filtered(args)
    index = build_index(corpus)
    from .dataset import build_examples

    window = _window_from_args(args, corpus)
    examples = build_examples(corpus, index, window, args.phase)
    if args.task == "feedback":
        examples = feedback_subset(examples, args.include_nonparticipants)
    elif args.rate is not None and args.phase == "train":
        examples = undersample(examples, SamplingConfig(rate=args.rate, seed=args.seed))
    write_examples_tsv(examples, args.out)
    return 0


def cmd_train(args) -> int:
    examples = read_examples_tsv(args.examples)
    if args.task == "feedback":
        examples = feedback_subset(examples, args.include_nonparticipants)
    elif args.rate is not None:
        examples = undersample(examples, SamplingConfig(rate=args.rate, seed=args.seed))
    columns = get_selector(args.feature_set).fields
    X = matrix_from_examples(examples, columns)
    y = labels_from_examples(examples, args.task)
    params = json.loads(args.params) if args.params else {}
    spec = ModelSpec.make(args.family, params, seed=args.seed)
    model = train(spec, X, y, n_jobs=args.jobs)
    save_model(model, args.out or "model.json")
    print(f"trained {args.family} on {X.n_rows} examples -> {args.out or 'model.json'}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    examples = read_examples_tsv(args.examples)
    X = matrix_from_examples(examples, model.columns)
    values = model.predict_scores(X) if model.kind == "classifier" else model.predict_values(X)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", encoding="utf-8")
    try:
        out.write("review_id\tcandidate_id\tprediction\n")
        for ex, v in zip(examples, values):
            out.write(f"{ex.review_id}\t{ex.candidate_id}\t{v!r}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    examples = read_examples_tsv(args.examples)
    if model.kind == "regressor" and not args.include_nonparticipants:
        examples = feedback_subset(examples)
    X = matrix_from_examples(examples, model.columns)
    lines = []
    if model.kind == "classifier":
        y = labels_from_examples(examples, "participation")
        rep = classification_report(y, model.predict_labels(X), model.predict_scores(X))
        lines = [
            f"tp {rep.tp}",
            f"fp {rep.fp}",
            f"tn {rep.tn}",
            f"fn {rep.fn}",
            f"precision {fmt_metric(rep.precision)}",
            f"recall {fmt_metric(rep.recall)}",
            f"f1 {fmt_metric(rep.f1)}",
            f"auprc {fmt_metric(rep.auprc)}",
        ]
    else:
        y = labels_from_examples(examples, "feedback")
        rep = regression_report(y, model.predict_values(X))
        lines = [
            f"rmse {fmt_metric(rep.rmse)}",
            f"pearson_r {fmt_metric(rep.pearson_r)}",
            f"r2 {fmt_metric(rep.r2)}",
        ]
    text = "\n".join(lines) + "\n"
    if args.out and args.out != "-":
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_synth(args) -> int:
    if args.synth_config:
        with open(args.synth_config, encoding="utf-8") as fh:
            cfg_obj = json.load(fh)
    else:
        cfg_obj = {}
    if args.seed is not None:
        cfg_obj["seed"] = args.seed
    config = SynthConfig(**cfg_obj)
    corpus, ground_truth = generate(config)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, out / "reviews.ndjson", out / "org.ndjson", out / "modules.ndjson")
    save_ground_truth(ground_truth, out / "ground_truth.json")
    print(
        f"synthetic corpus: {len(corpus.reviews)} reviews, "
        f"{len(corpus.assignments)} developers -> {out}"
    )
    return 0


def _plan(args) -> ExperimentPlan:
    if not args.config:
        raise PlanError("--config plan file required")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out:
        overrides["out_dir"] = args.out
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    return load_plan(args.config, corpus_dir_env=os.environ.get(ENV_CORPUS_DIR), **overrides)


def _out_dir(plan) -> Path:
    out = Path(plan.out_dir or "results")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_rq1(args) -> int:
    from . import plots

    plan = _plan(args)
    corpus, index = prepare_corpus(plan)
    report = run_rq1(plan, corpus, index)
    out = _out_dir(plan)
    report_mod.write_report(report, out, "rq1")
    plots.render_rq1_participation(report, out / "rq1_participation.png")
    plots.render_rq1_feedback(report, out / "rq1_feedback.png")
    print(f"rq1: {len(report.rows)} configurations -> {out}")
    return 0


def cmd_rq2(args) -> int:
    from . import plots

    plan = _plan(args)
    corpus, index = prepare_corpus(plan)
    rq1_report = _maybe_rq1_report(plan)
    results = run_rq2(plan, corpus, index, rq1_report)
    out = _out_dir(plan)
    for task, (rfe_result, imp) in results.items():
        report_mod.write_report(report_mod.rfe_table(rfe_result, task), out, f"rq2_rfe_{task}")
        plots.render_rfe(rfe_result, task, out / f"rq2_rfe_{task}.png")
    imp_table = report_mod.importance_table({task: imp for task, (_r, imp) in results.items()})
    report_mod.write_report(imp_table, out, "rq2_importance")
    plots.render_importance({task: imp for task, (_r, imp) in results.items()}, out / "rq2_importance.png")
    with open(out / "rq2.json", "w", encoding="utf-8") as fh:
        json.dump(report_mod.rq2_summary(results), fh, indent=1)
    for task, (rfe_result, _imp) in results.items():
        print(f"rq2 {task}: selected {len(rfe_result.selected)} features: {', '.join(rfe_result.selected)}")
    return 0


def _maybe_rq1_report(plan):
    out = Path(plan.out_dir or "results")
    rq1_path = out / "rq1.json"
    if rq1_path.exists():
        return report_mod.read_json(rq1_path)
    return None


def cmd_rq3(args) -> int:
    from . import plots

    plan = _plan(args)
    corpus, index = prepare_corpus(plan)
    rq1_report = _maybe_rq1_report(plan)
    out = _out_dir(plan)
    selected = None
    rq2_path = out / "rq2.json"
    if rq2_path.exists():
        with open(rq2_path, encoding="utf-8") as fh:
            summary = json.load(fh)
        selected = {task: tuple(entry["selected"]) for task, entry in summary.items()}
    report = run_rq3(plan, corpus, index, rq1_report, selected)
    report_mod.write_report(report, out, "rq3")
    for task in plan.tasks:
        plots.render_rq3(report, task, out / f"rq3_{task}.png")
    print(f"rq3: {len(report.rows)} cells -> {out}")
    return 0


def cmd_select(args) -> int:
    return cmd_rq2(args)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="revsignal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load and validate a corpus")
    _add_corpus_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("filter", help="apply dataset cleaning rules")
    _add_corpus_args(p)
    _add_filter_args(p)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("featurize", help="emit the feature matrix for all (review, candidate) pairs")
    _add_corpus_args(p)
    _add_filter_args(p)
    p.add_argument("--window-start", type=int, default=0, help="history window start (epoch seconds)")
    p.add_argument("--out", help="output TSV (default stdout)")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("examples", help="emit labeled training/test examples for one window")
    _add_corpus_args(p)
    _add_filter_args(p)
    p.add_argument("--timeframe", type=int, default=12, help="training window length in months")
    p.add_argument("--period-months", type=int, default=3)
    p.add_argument("--n-periods", type=int, default=1)
    p.add_argument("--window", type=int, default=0, help="window index")
    p.add_argument("--phase", choices=("train", "test"), default="train")
    p.add_argument("--task", choices=("participation", "feedback"), default="participation")
    p.add_argument("--rate", type=float, help="undersampling rate for participation training data")
    p.add_argument("--include-nonparticipants", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output TSV (default stdout)")
    p.set_defaults(func=cmd_examples)

    p = sub.add_parser("train", help="train a model on an examples file")
    p.add_argument("--examples", required=True, help="labeled examples TSV")
    p.add_argument("--family", required=True)
    p.add_argument("--task", choices=("participation", "feedback"), default="participation")
    p.add_argument("--feature-set", default="ALL")
    p.add_argument("--params", help="hyperparameters as JSON")
    p.add_argument("--rate", type=float, help="undersampling rate applied before training")
    p.add_argument("--include-nonparticipants", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="model file (default model.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score an examples file with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--examples", required=True)
    p.add_argument("--out", help="output TSV (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="evaluate a saved model on labeled examples")
    p.add_argument("--model", required=True)
    p.add_argument("--examples", required=True)
    p.add_argument("--include-nonparticipants", action="store_true")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    p.add_argument("--synth-config", help="SynthConfig JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_synth)

    for name, func, help_text in (
        ("rq1", cmd_rq1, "feature set x algorithm x sampling rate sweep"),
        ("rq2", cmd_rq2, "recursive feature elimination + importance measures"),
        ("select", cmd_select, "alias of rq2"),
        ("rq3", cmd_rq3, "timeframe sweep on aligned test periods"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment plan JSON")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--jobs", type=int)
        p.set_defaults(func=func)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PlanError, MissingRQ1Report) as exc:
        print(f"plan error: {exc}", file=sys.stderr)
        return 2
    except CorpusError as exc:
        print(f"corpus error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
