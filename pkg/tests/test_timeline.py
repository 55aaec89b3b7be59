import numpy as np
import pytest

from randcorpus import (
    brute_count,
    brute_maintainer,
    brute_open_reviews,
    brute_org,
    brute_reviewers,
    brute_team_modules,
    random_corpus,
)
from revsignal.corpus import Comment, Corpus, FileChange, ReviewRecord
from revsignal.timeline import NoAssignment, build_index


def test_mc1_reviewer_sets(mc1_index):
    assert mc1_index.reviewers_of("c1") == {"R1"}
    assert mc1_index.reviewers_of("c2") == {"A"}
    assert mc1_index.reviewers_of("c3") == frozenset()


def test_mc1_counts(mc1_index):
    assert mc1_index.count_by("R1", "file", "f1", "reviewer", 500, 0) == 1
    assert mc1_index.count_by("R2", "module", "M1", "author", 500, 0) == 1
    # empty window
    assert mc1_index.count_by("R1", "file", "f1", "reviewer", 500, 500) == 0


def test_mc1_open_reviews(mc1_index):
    assert mc1_index.open_reviews("A", "author", 500) == 1  # c3 itself
    assert mc1_index.open_reviews("R1", "reviewer", 150) == 1  # c1 open, R1 commented
    assert mc1_index.open_reviews("R1", "reviewer", 50) == 0  # before any review
    assert mc1_index.open_reviews("A", "author", 50) == 0


def test_mc1_org(mc1_index):
    assert mc1_index.org_lookup("R2", 500) == ("T2", "L2", "lead2")
    assert mc1_index.maintainer_check("R1", "M1", 500) is True
    assert mc1_index.maintainer_check("R2", "M1", 500) is False
    assert mc1_index.team_modules("T1", 500) == {"M1"}
    assert mc1_index.team_modules("T2", 500) == set()


def test_half_open_boundary():
    rng = np.random.default_rng(0)
    corpus = random_corpus(rng, n_reviews=0, employment_gaps=False)
    # craft one assignment [0, 100)
    from revsignal.corpus import OrgAssignment

    corpus = Corpus(
        reviews=(),
        assignments=(OrgAssignment("dx", "t0", "m", "loc0", 0, 100),),
        modules=corpus.modules,
    )
    index = build_index(corpus)
    assert index.org_lookup("dx", 99) == ("t0", "loc0", "m")
    with pytest.raises(NoAssignment):
        index.org_lookup("dx", 100)


def test_empty_corpus_queries():
    corpus = Corpus(reviews=(), assignments=(), modules=())
    index = build_index(corpus)
    assert index.count_by("d", "file", "f", "reviewer", 100) == 0
    assert index.count_by("d", "module", "m", "author", 100) == 0
    assert index.open_reviews("d", "author", 100) == 0
    assert index.employed_at(5) == set()


def test_author_self_comment_is_not_reviewing():
    review = ReviewRecord(
        review_id="r",
        module_id="m0",
        author_id="d0",
        created_at=10,
        closed_at=20,
        status="merged",
        files=(FileChange("f0", 1, 0),),
        changed_loc=1,
        comments=(Comment("d0", 15), Comment("d1", 16)),
    )
    rng = np.random.default_rng(1)
    base = random_corpus(rng, n_reviews=0, employment_gaps=False)
    corpus = Corpus(reviews=(review,), assignments=base.assignments, modules=base.modules)
    index = build_index(corpus)
    assert index.reviewers_of("r") == {"d1"}
    assert index.count_by("d0", "file", "f0", "reviewer", 100) == 0
    assert index.count_by("d0", "file", "f0", "author", 100) == 1


def _query_points(corpus):
    times = sorted({r.created_at for r in corpus.reviews})
    pts = {0, 1}
    for t in times:
        pts.update((t - 1, t, t + 1))
    if times:
        pts.add(times[-1] + 10_000)
    return sorted(p for p in pts if p >= 0)


def test_oracle_equivalence_random_corpora():
    rng = np.random.default_rng(42)
    for _ in range(15):
        corpus = random_corpus(rng, n_devs=5, n_modules=3, n_reviews=25)
        index = build_index(corpus)
        devs = sorted({a.developer_id for a in corpus.assignments})
        files = sorted({f.path for r in corpus.reviews for f in r.files})
        modules = [m.module_id for m in corpus.modules]
        points = _query_points(corpus)
        horizons = points[:: max(1, len(points) // 8)]
        for dev in devs:
            for t in horizons:
                for role in ("author", "reviewer"):
                    assert index.open_reviews(dev, role, t) == brute_open_reviews(corpus, dev, role, t)
                    for f in files[:4]:
                        assert index.count_by(dev, "file", f, role, t) == brute_count(corpus, dev, "file", f, role, t)
                    for m in modules:
                        assert index.count_by(dev, "module", m, role, t) == brute_count(
                            corpus, dev, "module", m, role, t
                        )
                expected = brute_org(corpus, dev, t)
                if expected is None:
                    with pytest.raises(NoAssignment):
                        index.org_lookup(dev, t)
                else:
                    assert tuple(index.org_lookup(dev, t)) == expected
                for m in modules:
                    assert index.maintainer_check(dev, m, t) == brute_maintainer(corpus, dev, m, t)
        for team in ("t0", "t1"):
            for t in horizons:
                assert index.team_modules(team, t) == brute_team_modules(corpus, team, t)


def test_window_start_restricts_counts():
    rng = np.random.default_rng(7)
    corpus = random_corpus(rng, n_reviews=30)
    index = build_index(corpus)
    devs = sorted({a.developer_id for a in corpus.assignments})
    t = corpus.reviews[-1].created_at + 1
    w = corpus.reviews[len(corpus.reviews) // 2].created_at
    for dev in devs:
        for m in (m.module_id for m in corpus.modules):
            assert index.count_by(dev, "module", m, "author", t, w) == brute_count(corpus, dev, "module", m, "author", t, w)


def test_leak_freedom_appending_future_reviews():
    rng = np.random.default_rng(9)
    for _ in range(10):
        corpus = random_corpus(rng, n_reviews=20)
        horizon = corpus.reviews[-1].created_at + 1
        extra = random_corpus(rng, n_reviews=8)
        shifted = []
        for i, r in enumerate(extra.reviews):
            created = horizon + 100 + i * 50
            closed = None if r.closed_at is None else created + (r.closed_at - r.created_at)
            comments = tuple(
                Comment(c.commenter_id, created + 1 + j, c.is_bot) for j, c in enumerate(r.comments)
            )
            shifted.append(
                ReviewRecord(
                    review_id=f"future{i}",
                    module_id=corpus.modules[0].module_id,
                    author_id=corpus.assignments[0].developer_id,
                    created_at=created,
                    closed_at=closed,
                    status=r.status,
                    files=r.files,
                    changed_loc=r.changed_loc,
                    comments=comments,
                )
            )
        grown = Corpus(
            reviews=tuple(sorted(corpus.reviews + tuple(shifted), key=lambda r: (r.created_at, r.review_id))),
            assignments=corpus.assignments,
            modules=corpus.modules,
        )
        before = build_index(corpus)
        after = build_index(grown)
        devs = sorted({a.developer_id for a in corpus.assignments})
        for dev in devs:
            for role in ("author", "reviewer"):
                for t in (horizon, horizon // 2, 1):
                    assert before.open_reviews(dev, role, t) == after.open_reviews(dev, role, t)
                    for m in (m.module_id for m in corpus.modules):
                        assert before.count_by(dev, "module", m, role, t) == after.count_by(dev, "module", m, role, t)


def test_count_monotone_in_horizon():
    rng = np.random.default_rng(13)
    corpus = random_corpus(rng, n_reviews=40)
    index = build_index(corpus)
    dev = corpus.reviews[0].author_id
    module = corpus.reviews[0].module_id
    last = 0
    for t in _query_points(corpus):
        now = index.count_by(dev, "module", module, "author", t)
        assert now >= last
        last = now
