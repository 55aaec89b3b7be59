import json

import numpy as np
import pytest

from randcorpus import random_corpus
from revsignal.corpus import (
    Comment,
    CorpusWarning,
    DanglingReference,
    FileChange,
    FilterConfig,
    MalformedRecord,
    OverlappingInterval,
    ReviewRecord,
    THIRTY_DAYS,
    filter_corpus,
    load_corpus,
    save_corpus,
    validate_corpus,
)


def write_lines(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")


def test_mc1_loads(mc1):
    assert len(mc1.reviews) == 3
    assert len(mc1.assignments) == 3
    assert len(mc1.modules) == 1
    assert [r.review_id for r in mc1.reviews] == ["c1", "c2", "c3"]
    assert mc1.reviews[2].closed_at is None
    assert mc1.reviews[2].status == "open"


def test_empty_files_give_empty_corpus(tmp_path):
    for name in ("reviews", "org", "modules"):
        (tmp_path / f"{name}.ndjson").write_text("", encoding="utf-8")
    corpus = load_corpus(tmp_path / "reviews.ndjson", tmp_path / "org.ndjson", tmp_path / "modules.ndjson")
    assert corpus.reviews == ()
    assert corpus.assignments == ()
    assert corpus.modules == ()


def test_unknown_module_is_dangling(tmp_path, mc1_paths):
    write_lines(
        tmp_path / "reviews.ndjson",
        [
            {
                "review_id": "c9",
                "module_id": "mX",
                "author_id": "A",
                "created_at": 10,
                "closed_at": 20,
                "status": "merged",
                "files": [],
                "changed_loc": 0,
                "comments": [],
            }
        ],
    )
    with pytest.raises(DanglingReference) as err:
        load_corpus(tmp_path / "reviews.ndjson", mc1_paths[1], mc1_paths[2])
    assert "mX" in str(err.value)


def test_malformed_json_reports_line(tmp_path, mc1_paths):
    (tmp_path / "reviews.ndjson").write_text("{}\nnot json\n", encoding="utf-8")
    with pytest.raises(MalformedRecord) as err:
        load_corpus(tmp_path / "reviews.ndjson", mc1_paths[1], mc1_paths[2])
    assert err.value.line_no == 1  # first record is missing fields


def test_bad_json_line_number(tmp_path, mc1_paths):
    good = (mc1_paths[0]).read_text().splitlines()[0]
    (tmp_path / "reviews.ndjson").write_text(good + "\n{broken\n", encoding="utf-8")
    with pytest.raises(MalformedRecord) as err:
        load_corpus(tmp_path / "reviews.ndjson", mc1_paths[1], mc1_paths[2])
    assert err.value.line_no == 2


def test_overlapping_assignment_rejected(tmp_path, mc1_paths):
    write_lines(
        tmp_path / "org.ndjson",
        [
            {"developer_id": "A", "team_id": "T1", "manager_id": "m", "location_id": "L", "valid_from": 0, "valid_to": 100},
            {"developer_id": "A", "team_id": "T2", "manager_id": "m", "location_id": "L", "valid_from": 50},
        ],
    )
    (tmp_path / "reviews.ndjson").write_text("", encoding="utf-8")
    with pytest.raises(OverlappingInterval):
        load_corpus(tmp_path / "reviews.ndjson", tmp_path / "org.ndjson", mc1_paths[2])


def test_duplicate_review_id_rejected(tmp_path, mc1_paths):
    line = json.loads((mc1_paths[0]).read_text().splitlines()[0])
    write_lines(tmp_path / "reviews.ndjson", [line, line])
    with pytest.raises(MalformedRecord):
        load_corpus(tmp_path / "reviews.ndjson", mc1_paths[1], mc1_paths[2])


def test_changed_loc_recomputed_with_warning(tmp_path, mc1_paths):
    obj = json.loads((mc1_paths[0]).read_text().splitlines()[0])
    obj["changed_loc"] = 999
    write_lines(tmp_path / "reviews.ndjson", [obj])
    with pytest.warns(CorpusWarning):
        corpus = load_corpus(tmp_path / "reviews.ndjson", mc1_paths[1], mc1_paths[2])
    assert corpus.reviews[0].changed_loc == 5


def test_comment_outside_lifetime_rejected(tmp_path, mc1_paths):
    obj = json.loads((mc1_paths[0]).read_text().splitlines()[0])
    obj["comments"] = [{"commenter_id": "R1", "timestamp": 999, "is_bot": False}]
    write_lines(tmp_path / "reviews.ndjson", [obj])
    with pytest.raises(MalformedRecord):
        load_corpus(tmp_path / "reviews.ndjson", mc1_paths[1], mc1_paths[2])


def test_reviews_sorted_with_ties_by_id(tmp_path, mc1_paths):
    base = {
        "module_id": "M1",
        "author_id": "A",
        "created_at": 100,
        "closed_at": 150,
        "status": "merged",
        "files": [],
        "changed_loc": 0,
        "comments": [],
    }
    write_lines(
        tmp_path / "reviews.ndjson",
        [dict(base, review_id="zz"), dict(base, review_id="aa"), dict(base, review_id="mm", created_at=50, closed_at=60)],
    )
    corpus = load_corpus(tmp_path / "reviews.ndjson", mc1_paths[1], mc1_paths[2])
    assert [r.review_id for r in corpus.reviews] == ["mm", "aa", "zz"]


# ---------------------------------------------------------------------------
# Filtering


def _mk_review(review_id, module_id="M1", author="A", created=100, closed=200, loc=10, bot=False, comments=()):
    files = (FileChange("f1", loc, 0),)
    return ReviewRecord(
        review_id=review_id,
        module_id=module_id,
        author_id=author,
        created_at=created,
        closed_at=closed,
        status="merged" if closed is not None else "open",
        files=files,
        changed_loc=loc,
        comments=tuple(comments),
        is_bot_authored=bot,
    )


def test_loc_boundary(mc1):
    big = _mk_review("big", loc=5001)
    ok = _mk_review("ok", loc=5000)
    corpus = mc1.__class__(reviews=(big, ok), assignments=mc1.assignments, modules=mc1.modules)
    out = filter_corpus(corpus)
    assert [r.review_id for r in out.reviews] == ["ok"]


def test_duration_boundary_exactly_30_days_retained(mc1):
    exact = _mk_review("exact", created=0, closed=THIRTY_DAYS)
    over = _mk_review("over", created=0, closed=THIRTY_DAYS + 1)
    open_review = ReviewRecord(
        review_id="openone",
        module_id="M1",
        author_id="A",
        created_at=0,
        closed_at=None,
        status="open",
        files=(),
        changed_loc=0,
        comments=(),
        is_bot_authored=False,
    )
    corpus = mc1.__class__(reviews=(exact, over, open_review), assignments=mc1.assignments, modules=mc1.modules)
    out = filter_corpus(corpus)
    assert {r.review_id for r in out.reviews} == {"exact", "openone"}


def test_bot_review_dropped_and_bot_comment_stripped(mc1):
    bot_review = _mk_review("botr", bot=True)
    bot_comment = Comment("R1", 150, is_bot=True)
    human_comment = Comment("R1", 160, is_bot=False)
    noisy = _mk_review("noisy", comments=(bot_comment, human_comment))
    corpus = mc1.__class__(
        reviews=tuple(sorted((bot_review, noisy) + mc1.reviews, key=lambda r: (r.created_at, r.review_id))),
        assignments=mc1.assignments,
        modules=mc1.modules,
    )
    out = filter_corpus(corpus)
    ids = {r.review_id for r in out.reviews}
    assert "botr" not in ids and "noisy" in ids
    noisy_out = next(r for r in out.reviews if r.review_id == "noisy")
    assert noisy_out.comments == (human_comment,)
    # MC1 reviews untouched
    assert all(r.review_id in ids for r in mc1.reviews)


def test_keep_bots_flag(mc1):
    bot_review = _mk_review("botr", bot=True)
    corpus = mc1.__class__(reviews=(bot_review,), assignments=mc1.assignments, modules=mc1.modules)
    out = filter_corpus(corpus, FilterConfig(keep_bots=True))
    assert [r.review_id for r in out.reviews] == ["botr"]


def test_non_code_categories_dropped(mc1):
    from revsignal.corpus import ModuleRecord, OwnershipInterval

    doc_module = ModuleRecord("DOCS", (OwnershipInterval("T1", 0, None),), (), category="documentation")
    r = _mk_review("docreview", module_id="DOCS")
    corpus = mc1.__class__(reviews=(r,) + mc1.reviews, assignments=mc1.assignments, modules=mc1.modules + (doc_module,))
    out = filter_corpus(corpus)
    assert all(rr.module_id != "DOCS" for rr in out.reviews)
    assert len(out.reviews) == 3


def test_filter_idempotent_and_input_unmodified():
    rng = np.random.default_rng(11)
    for _ in range(20):
        corpus = random_corpus(rng)
        before = corpus.reviews
        once = filter_corpus(corpus)
        twice = filter_corpus(once)
        assert once == twice
        assert corpus.reviews == before


def test_filter_never_drops_a_keeper():
    rng = np.random.default_rng(23)
    rules = FilterConfig(max_loc=60, max_duration=20_000)
    for _ in range(20):
        corpus = random_corpus(rng)
        category = {m.module_id: m.category for m in corpus.modules}
        kept = {r.review_id for r in filter_corpus(corpus, rules).reviews}
        for r in corpus.reviews:
            keeper = (
                category[r.module_id] == "code"
                and r.changed_loc <= rules.max_loc
                and (r.closed_at is None or r.closed_at - r.created_at <= rules.max_duration)
                and not r.is_bot_authored
            )
            if keeper:
                assert r.review_id in kept


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    corpus = random_corpus(rng, n_reviews=40)
    validate_corpus(corpus)
    paths = (tmp_path / "reviews.ndjson", tmp_path / "org.ndjson", tmp_path / "modules.ndjson")
    save_corpus(corpus, *paths)
    loaded = load_corpus(*paths)
    assert loaded == corpus
