"""Per-(review, candidate) feature vectors evaluated at review creation time.

Twelve features: changed LOC, four code-ownership counts plus the maintainer
flag, two workload counts, and four team-relationship features. All history
counts respect the horizon (review creation) and an optional window start,
and never include the target review itself.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import ReviewRecord
from .timeline import TemporalIndex

FEATURE_NAMES: tuple[str, ...] = (
    "changed_loc",
    "file_reviewer",
    "file_author",
    "module_reviewer",
    "module_author",
    "is_maintainer",
    "author_workload",
    "reviewer_workload",
    "same_team",
    "same_location",
    "team_interactions_rev",
    "team_interactions_aut",
)


class AuthorAsCandidate(ValueError):
    def __init__(self, review_id: str, developer_id: str):
        super().__init__(f"{developer_id!r} is the author of review {review_id!r}")


@dataclass(frozen=True)
class FeatureVector:
    changed_loc: float
    file_reviewer: float
    file_author: float
    module_reviewer: float
    module_author: float
    is_maintainer: float
    author_workload: float
    reviewer_workload: float
    same_team: float
    same_location: float
    team_interactions_rev: float
    team_interactions_aut: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in FEATURE_NAMES}


@dataclass(frozen=True)
class FeatureSetSelector:
    """Named subset of the feature vector used in sweeps."""

    name: str
    fields: tuple[str, ...]


_CO = ("file_reviewer", "file_author", "module_reviewer", "module_author", "is_maintainer")
_WL = ("author_workload", "reviewer_workload")
_TR = ("same_team", "same_location", "team_interactions_rev", "team_interactions_aut")

FEATURE_SETS: dict[str, FeatureSetSelector] = {
    "LOC": FeatureSetSelector("LOC", ("changed_loc",)),
    "FR": FeatureSetSelector("FR", ("file_reviewer",)),
    "CO": FeatureSetSelector("CO", _CO),
    "WL": FeatureSetSelector("WL", _WL),
    "TR": FeatureSetSelector("TR", _TR),
    "PROPOSED": FeatureSetSelector("PROPOSED", _CO + _WL + _TR),
    "ALL": FeatureSetSelector("ALL", ("changed_loc",) + _CO + _WL + _TR),
}


def get_selector(name: str) -> FeatureSetSelector:
    try:
        return FEATURE_SETS[name.upper()]
    except KeyError:
        raise KeyError(f"unknown feature set {name!r}; expected one of {sorted(FEATURE_SETS)}") from None


def apply_selector(vector: FeatureVector, selector: FeatureSetSelector) -> dict[str, float]:
    """Project the vector onto the selector; unselected fields are absent."""
    return {name: getattr(vector, name) for name in selector.fields}


def compute_features(
    index: TemporalIndex,
    review: ReviewRecord,
    candidate: str,
    window_start: float = 0,
) -> FeatureVector:
    """Feature vector for (review, candidate) at t = review.created_at.

    History counts cover [window_start, t). Workload counts exclude the
    target review itself: at decision time the candidate has not joined it,
    and counting it would leak the participation label.
    """
    if candidate == review.author_id:
        raise AuthorAsCandidate(review.review_id, candidate)
    t = review.created_at

    file_reviewer = 0
    file_author = 0
    for f in review.files:
        file_reviewer += index.count_by(candidate, "file", f.path, "reviewer", t, window_start)
        file_author += index.count_by(candidate, "file", f.path, "author", t, window_start)

    module_reviewer = index.count_by(candidate, "module", review.module_id, "reviewer", t, window_start)
    module_author = index.count_by(candidate, "module", review.module_id, "author", t, window_start)
    is_maintainer = 1.0 if index.maintainer_check(candidate, review.module_id, t) else 0.0

    author_workload = index.open_reviews(candidate, "author", t)
    reviewer_workload = index.open_reviews(candidate, "reviewer", t)
    if review.is_open_at(t):
        if candidate == review.author_id:  # unreachable given the precondition
            author_workload -= 1
        if candidate in index.reviewers_of(review.review_id):
            reviewer_workload -= 1

    cand_org = index.org_lookup(candidate, t)
    author_org = index.org_lookup(review.author_id, t)
    same_team = 1.0 if cand_org.team_id == author_org.team_id else 0.0
    same_location = 1.0 if cand_org.location_id == author_org.location_id else 0.0

    team_interactions_rev = 0
    team_interactions_aut = 0
    for module_id in index.team_modules(author_org.team_id, t):
        team_interactions_rev += index.count_by(candidate, "module", module_id, "reviewer", t, window_start)
        team_interactions_aut += index.count_by(candidate, "module", module_id, "author", t, window_start)

    return FeatureVector(
        changed_loc=float(review.changed_loc),
        file_reviewer=float(file_reviewer),
        file_author=float(file_author),
        module_reviewer=float(module_reviewer),
        module_author=float(module_author),
        is_maintainer=is_maintainer,
        author_workload=float(author_workload),
        reviewer_workload=float(reviewer_workload),
        same_team=same_team,
        same_location=same_location,
        team_interactions_rev=float(team_interactions_rev),
        team_interactions_aut=float(team_interactions_aut),
    )
