import math

import numpy as np
import pytest

from randcorpus import random_corpus
from revsignal.dataset import (
    SECONDS_PER_MONTH,
    InsufficientSpan,
    SamplingConfig,
    WindowSpec,
    build_examples,
    candidate_pool,
    feedback_subset,
    make_windows,
    undersample,
)
from revsignal.timeline import build_index


def test_mc1_candidate_pools(mc1, mc1_index):
    by_id = {r.review_id: r for r in mc1.reviews}
    assert candidate_pool(mc1_index, by_id["c3"]) == {"R1", "R2"}
    assert candidate_pool(mc1_index, by_id["c1"]) == {"R1", "R2"}
    assert candidate_pool(mc1_index, by_id["c2"]) == {"A", "R1"}


def test_pool_excludes_expired_assignments():
    rng = np.random.default_rng(0)
    corpus = random_corpus(rng, n_reviews=0, employment_gaps=False)
    from revsignal.corpus import Corpus, OrgAssignment, ReviewRecord

    assignments = (
        OrgAssignment("here", "t0", "m", "loc0", 0, None),
        OrgAssignment("gone", "t0", "m", "loc0", 0, 50),
        OrgAssignment("author", "t0", "m", "loc0", 0, None),
    )
    review = ReviewRecord("r", corpus.modules[0].module_id, "author", 100, None, "open", (), 0, ())
    c = Corpus(reviews=(review,), assignments=assignments, modules=corpus.modules)
    index = build_index(c)
    assert candidate_pool(index, review) == {"here"}


def test_mc1_full_window_examples(mc1, mc1_index):
    window = WindowSpec(0, 600, 600, 700)
    examples = build_examples(mc1, mc1_index, window, "train")
    key = {(e.review_id, e.candidate_id): e for e in examples}
    assert sorted(key) == [
        ("c1", "R1"),
        ("c1", "R2"),
        ("c2", "A"),
        ("c2", "R1"),
        ("c3", "R1"),
        ("c3", "R2"),
    ]
    assert [e.participated for e in examples] == [True, False, True, False, False, False]
    c1r1 = key[("c1", "R1")]
    assert c1r1.comment_count == 2
    assert c1r1.log_feedback == pytest.approx(math.log10(3), abs=1e-12)
    # sorted output
    assert [(e.review_id, e.candidate_id) for e in examples] == sorted(key)


def test_empty_test_interval(mc1, mc1_index):
    window = WindowSpec(0, 600, 600, 700)
    assert build_examples(mc1, mc1_index, window, "test") == []


def test_log_feedback_contract(mc1, mc1_index):
    examples = build_examples(mc1, mc1_index, WindowSpec(0, 600, 600, 700), "train")
    for ex in examples:
        assert ex.log_feedback == math.log10(1 + ex.comment_count)
        assert ex.participated == (ex.comment_count > 0)


def test_feedback_subset_participants_only(mc1, mc1_index):
    examples = build_examples(mc1, mc1_index, WindowSpec(0, 600, 600, 700), "train")
    fb = feedback_subset(examples)
    assert all(e.participated for e in fb)
    assert len(fb) == 2
    assert len(feedback_subset(examples, include_nonparticipants=True)) == 6


# ---------------------------------------------------------------------------
# Undersampling


def _fake_examples(n_pos, n_neg):
    from revsignal.dataset import TrainingExample
    from revsignal.features import FeatureVector

    fv = FeatureVector(*([0.0] * 12))
    out = []
    for i in range(n_pos + n_neg):
        positive = i % 2 == 0 if n_pos and n_neg else bool(n_pos)
        out.append(
            TrainingExample(f"r{i:04d}", f"c{i:04d}", fv, positive, 1 if positive else 0, 0.0)
        )
    # adjust to exact counts
    pos_needed = n_pos
    fixed = []
    for ex in out:
        make_pos = pos_needed > 0
        if make_pos:
            pos_needed -= 1
        fixed.append(
            ex.__class__(ex.review_id, ex.candidate_id, fv, make_pos, 1 if make_pos else 0, 0.0)
        )
    return fixed


@pytest.mark.parametrize("rate,n_neg,expected", [
    (0.10, 100, 10),
    (0.50, 3, 2),     # round-half-up
    (0.05, 100, 5),
    (0.15, 100, 15),
    (0.20, 100, 20),
    (0.25, 100, 25),
    (0.01, 10, 1),    # minimum one negative
])
def test_undersample_counts(rate, n_neg, expected):
    examples = _fake_examples(7, n_neg)
    out = undersample(examples, SamplingConfig(rate=rate, seed=1))
    assert sum(1 for e in out if e.participated) == 7
    assert sum(1 for e in out if not e.participated) == expected


def test_undersample_rate_one_is_identity():
    examples = _fake_examples(3, 50)
    assert undersample(examples, SamplingConfig(rate=1.0, seed=5)) == examples


def test_undersample_deterministic_and_order_preserving():
    examples = _fake_examples(5, 200)
    a = undersample(examples, SamplingConfig(rate=0.25, seed=9))
    b = undersample(examples, SamplingConfig(rate=0.25, seed=9))
    c = undersample(examples, SamplingConfig(rate=0.25, seed=10))
    assert a == b
    assert a != c
    # positives identical across seeds
    assert [e for e in a if e.participated] == [e for e in c if e.participated]
    # original order preserved
    pos = {id(e): i for i, e in enumerate(examples)}
    ranks = [pos[id(e)] for e in a]
    assert ranks == sorted(ranks)


def test_sampling_config_validation():
    with pytest.raises(ValueError):
        SamplingConfig(rate=0.0)
    with pytest.raises(ValueError):
        SamplingConfig(rate=1.5)


# ---------------------------------------------------------------------------
# Windows


def test_window_spec_ordering_enforced():
    with pytest.raises(ValueError):
        WindowSpec(10, 10, 20, 30)
    with pytest.raises(ValueError):
        WindowSpec(0, 30, 20, 40)


def test_make_windows_basic():
    day = 86_400
    windows = make_windows((0, 180 * day), 3, 1, 3)
    assert windows == [WindowSpec(0, 90 * day, 90 * day, 180 * day)]


def test_make_windows_five_periods():
    month = SECONDS_PER_MONTH
    span = (0, 27 * month)
    windows = make_windows(span, 12, 5, 3)
    assert len(windows) == 5
    assert windows[0].test_start == 12 * month
    for k, w in enumerate(windows):
        assert w.test_end - w.test_start == 3 * month
        assert w.train_end - w.train_start == 12 * month
        assert w.test_start == 12 * month + k * 3 * month


def test_make_windows_zero_periods():
    assert make_windows((0, 100), 3, 0) == []


def test_make_windows_insufficient_span():
    month = SECONDS_PER_MONTH
    with pytest.raises(InsufficientSpan):
        make_windows((0, 14 * month), 12, 1, 3)


def test_make_windows_alignment_override():
    month = SECONDS_PER_MONTH
    span = (0, 27 * month)
    anchor = 12 * month
    for timeframe in (3, 6, 9, 12):
        windows = make_windows(span, timeframe, 5, 3, first_test_start=anchor)
        assert [w.test_start for w in windows] == [anchor + k * 3 * month for k in range(5)]
        assert all(w.train_end - w.train_start == timeframe * month for w in windows)
