import json
import os
from pathlib import Path

import numpy as np
import pytest

from revsignal.cli import main, read_examples_tsv

MC1 = Path(__file__).parent / "fixtures" / "mc1"


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli_corpus")
    cfg = {
        "n_developers": 10,
        "n_teams": 3,
        "n_locations": 2,
        "n_modules": 6,
        "span_days": 150,
        "reviews_per_day": 4,
        "participation_weights": {"file_author": 0.8, "is_maintainer": 1.0},
        "participation_intercept": -2.0,
        "feedback_weights": {"changed_loc": 0.3},
        "history_window_days": 30,
        "seed": 3,
    }
    cfg_path = tmp / "synth.json"
    cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
    assert run("synth", "--synth-config", cfg_path, "--out", tmp / "corpus") == 0
    return tmp / "corpus"


def test_validate_mc1():
    assert run("validate", "--corpus-dir", MC1) == 0


def test_validate_env_var(monkeypatch):
    monkeypatch.setenv("REVSIGNAL_CORPUS_DIR", str(MC1))
    assert run("validate") == 0


def test_validate_missing_corpus_is_plan_error(tmp_path, monkeypatch):
    monkeypatch.delenv("REVSIGNAL_CORPUS_DIR", raising=False)
    assert run("validate") == 2


def test_validate_bad_corpus_exit_1(tmp_path):
    (tmp_path / "reviews.ndjson").write_text(
        '{"review_id": "r", "module_id": "nope", "author_id": "A", "created_at": 1, '
        '"closed_at": 2, "status": "merged", "files": [], "changed_loc": 0, "comments": []}\n',
        encoding="utf-8",
    )
    (tmp_path / "org.ndjson").write_text("", encoding="utf-8")
    (tmp_path / "modules.ndjson").write_text("", encoding="utf-8")
    assert run("validate", "--corpus-dir", tmp_path) == 1


def test_synth_written_files(synth_dir):
    assert (synth_dir / "reviews.ndjson").exists()
    assert (synth_dir / "org.ndjson").exists()
    assert (synth_dir / "modules.ndjson").exists()
    assert (synth_dir / "ground_truth.json").exists()
    assert run("validate", "--corpus-dir", synth_dir) == 0


def test_filter_roundtrip(synth_dir, tmp_path):
    assert run("filter", "--corpus-dir", synth_dir, "--max-loc", 100, "--out", tmp_path / "filtered") == 0
    assert run("validate", "--corpus-dir", tmp_path / "filtered") == 0


def test_featurize_mc1(tmp_path):
    out = tmp_path / "features.tsv"
    assert run("featurize", "--corpus-dir", MC1, "--out", out) == 0
    lines = out.read_text().strip().splitlines()
    header = lines[0].split("\t")
    assert header[:2] == ["review_id", "candidate_id"]
    assert len(header) == 14  # ids + 12 features
    assert len(lines) == 1 + 6  # MC1 has six (review, candidate) pairs


def test_examples_train_predict_evaluate_flow(synth_dir, tmp_path):
    train_tsv = tmp_path / "train.tsv"
    test_tsv = tmp_path / "test.tsv"
    common = ["--corpus-dir", synth_dir, "--timeframe", 3, "--period-months", 1, "--n-periods", 1]
    assert run("examples", *common, "--phase", "train", "--rate", "0.5", "--seed", 7, "--out", train_tsv) == 0
    assert run("examples", *common, "--phase", "test", "--out", test_tsv) == 0

    examples = read_examples_tsv(train_tsv)
    assert examples and any(e.participated for e in examples)

    model_path = tmp_path / "model.json"
    assert (
        run(
            "train",
            "--examples", train_tsv,
            "--family", "random_forest_clf",
            "--params", '{"n_trees": 8, "min_leaf": 5}',
            "--seed", 5,
            "--out", model_path,
        )
        == 0
    )
    assert model_path.exists()

    pred_path = tmp_path / "predictions.tsv"
    assert run("predict", "--model", model_path, "--examples", test_tsv, "--out", pred_path) == 0
    rows = pred_path.read_text().strip().splitlines()
    assert rows[0] == "review_id\tcandidate_id\tprediction"
    assert len(rows) == 1 + len(read_examples_tsv(test_tsv))

    eval_path = tmp_path / "eval.txt"
    assert run("evaluate", "--model", model_path, "--examples", test_tsv, "--out", eval_path) == 0
    text = eval_path.read_text()
    assert "precision" in text and "auprc" in text


def test_examples_feedback_task(synth_dir, tmp_path):
    out = tmp_path / "fb.tsv"
    assert (
        run(
            "examples",
            "--corpus-dir", synth_dir,
            "--timeframe", 3,
            "--period-months", 1,
            "--n-periods", 1,
            "--task", "feedback",
            "--out", out,
        )
        == 0
    )
    examples = read_examples_tsv(out)
    assert examples and all(e.participated for e in examples)


def _cli_plan(synth_dir, tmp_path, **extra):
    obj = {
        "corpus_dir": str(synth_dir),
        "out": str(tmp_path / "results"),
        "seed": 1,
        "feature_sets": ["CO", "ALL"],
        "algorithms": {"participation": ["random_forest_clf"], "feedback": ["random_forest_reg"]},
        "rates": [0.2],
        "window": {"timeframe_months": 3, "n_periods": 1, "period_months": 1},
        "timeframes": [1, 2],
        "rq3_periods": 2,
        "rfe_folds": 2,
        "grids": {
            "random_forest_clf": [{"n_trees": 8, "min_leaf": 5}],
            "random_forest_reg": [{"n_trees": 8, "min_leaf": 5}],
        },
    }
    obj.update(extra)
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(obj), encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def rq_outputs(synth_dir, tmp_path_factory):
    tmp = tmp_path_factory.mktemp("rq")
    plan = _cli_plan(synth_dir, tmp)
    assert run("rq1", "--config", plan) == 0
    assert run("rq2", "--config", plan) == 0
    assert run("rq3", "--config", plan) == 0
    return tmp / "results"


def test_rq1_outputs(rq_outputs):
    assert (rq_outputs / "rq1.tsv").exists()
    assert (rq_outputs / "rq1.txt").exists()
    assert (rq_outputs / "rq1.json").exists()
    assert (rq_outputs / "rq1_participation.png").exists()
    assert (rq_outputs / "rq1_feedback.png").exists()
    header = (rq_outputs / "rq1.tsv").read_text().splitlines()[0].split("\t")
    assert {"task", "feature_set", "algorithm", "rate", "f1", "auprc", "rmse", "r2", "seconds", "seed"} <= set(header)


def test_rq1_tsv_undefined_as_dash(rq_outputs):
    lines = (rq_outputs / "rq1.tsv").read_text().splitlines()
    header = lines[0].split("\t")
    rmse_col = header.index("rmse")
    task_col = header.index("task")
    participation_rows = [l.split("\t") for l in lines[1:] if l.split("\t")[task_col] == "participation"]
    assert participation_rows
    assert all(row[rmse_col] == "-" for row in participation_rows)


def test_rq2_outputs(rq_outputs):
    assert (rq_outputs / "rq2_rfe_participation.tsv").exists()
    assert (rq_outputs / "rq2_rfe_feedback.tsv").exists()
    assert (rq_outputs / "rq2_importance.tsv").exists()
    assert (rq_outputs / "rq2_importance.png").exists()
    assert (rq_outputs / "rq2.json").exists()
    imp_lines = (rq_outputs / "rq2_importance.tsv").read_text().strip().splitlines()
    assert len(imp_lines) == 1 + 12  # header + one row per feature
    summary = json.loads((rq_outputs / "rq2.json").read_text())
    assert set(summary) == {"participation", "feedback"}


def test_rq3_outputs(rq_outputs):
    assert (rq_outputs / "rq3.tsv").exists()
    assert (rq_outputs / "rq3_participation.png").exists()
    assert (rq_outputs / "rq3_feedback.png").exists()
    lines = (rq_outputs / "rq3.tsv").read_text().strip().splitlines()
    assert len(lines) == 1 + 8  # 2 timeframes x 2 periods x 2 tasks


def test_rq1_bad_plan_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"unknown_key": 1}', encoding="utf-8")
    assert run("rq1", "--config", bad) == 2


def test_rq1_missing_plan_exit_2(tmp_path):
    assert run("rq1", "--config", tmp_path / "missing.json") == 2
