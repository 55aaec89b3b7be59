"""Temporal index over a corpus: every query sees only events before its horizon.

The index is built once from a (filtered) corpus and is immutable; all query
methods answer "as of time t, using only events strictly before t" questions
so downstream feature computation cannot leak future information.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right, insort
from typing import Callable, Literal

from .corpus import Corpus, ReviewRecord

Role = Literal["author", "reviewer"]

ParticipationRule = Callable[[ReviewRecord], frozenset[str]]


class NoAssignment(LookupError):
    def __init__(self, developer_id: str, t: float):
        self.developer_id = developer_id
        self.t = t
        super().__init__(f"developer {developer_id!r} has no org assignment at t={t}")


def default_participation_rule(review: ReviewRecord) -> frozenset[str]:
    """A developer participates iff they posted >= 1 non-bot comment."""
    return frozenset(c.commenter_id for c in review.comments if not c.is_bot)


def _covers(valid_from: int, valid_to: int | None, t: float) -> bool:
    return valid_from <= t and (valid_to is None or t < valid_to)


class OrgView(tuple):
    """(team_id, location_id, manager_id) result of org_lookup."""

    __slots__ = ()

    def __new__(cls, team_id: str, location_id: str, manager_id: str):
        return super().__new__(cls, (team_id, location_id, manager_id))

    @property
    def team_id(self) -> str:
        return self[0]

    @property
    def location_id(self) -> str:
        return self[1]

    @property
    def manager_id(self) -> str:
        return self[2]


class TemporalIndex:
    """Immutable query structure; safe for concurrent readers."""

    def __init__(self, corpus: Corpus, participation_rule: ParticipationRule = default_participation_rule):
        self._rule = participation_rule

        # (dev, key, role) -> sorted created_at list; key is a file path or module id
        self._file_events: dict[tuple[str, str, str], list[int]] = {}
        self._module_events: dict[tuple[str, str, str], list[int]] = {}
        # (dev, role) -> sorted created / closed lists for open-review counting
        self._opened: dict[tuple[str, str], list[int]] = {}
        self._closed: dict[tuple[str, str], list[float]] = {}
        self._reviewers: dict[str, frozenset[str]] = {}

        for review in corpus.reviews:
            reviewers = frozenset(d for d in participation_rule(review) if d != review.author_id)
            self._reviewers[review.review_id] = reviewers
            t = review.created_at
            closed = math.inf if review.closed_at is None else review.closed_at
            participants = [(review.author_id, "author")] + [(d, "reviewer") for d in sorted(reviewers)]
            for dev, role in participants:
                for path in {f.path for f in review.files}:
                    self._file_events.setdefault((dev, path, role), []).append(t)
                self._module_events.setdefault((dev, review.module_id, role), []).append(t)
                self._opened.setdefault((dev, role), []).append(t)
                insort(self._closed.setdefault((dev, role), []), closed)

        # corpus.reviews is sorted by created_at, but tolerate hand-built corpora
        for events in self._file_events.values():
            events.sort()
        for events in self._module_events.values():
            events.sort()
        for opened in self._opened.values():
            opened.sort()

        # per developer: assignments sorted by valid_from
        self._org: dict[str, list[tuple[int, int | None, str, str, str]]] = {}
        for a in corpus.assignments:
            self._org.setdefault(a.developer_id, []).append(
                (a.valid_from, a.valid_to, a.team_id, a.location_id, a.manager_id)
            )
        for spans in self._org.values():
            spans.sort(key=lambda s: s[0])

        self._maintainers: dict[tuple[str, str], list[tuple[int, int | None]]] = {}
        self._team_modules: dict[str, list[tuple[str, int, int | None]]] = {}
        for m in corpus.modules:
            for iv in m.maintainer_intervals:
                self._maintainers.setdefault((m.module_id, iv.developer_id), []).append(
                    (iv.valid_from, iv.valid_to)
                )
            for ov in m.owning_team_intervals:
                self._team_modules.setdefault(ov.team_id, []).append((m.module_id, ov.valid_from, ov.valid_to))

    # -- review history -----------------------------------------------------

    def reviewers_of(self, review_id: str) -> frozenset[str]:
        return self._reviewers.get(review_id, frozenset())

    def count_by(self, developer: str, scope: str, key: str, role: Role, horizon: float, window_start: float = 0) -> int:
        """Distinct reviews in [window_start, horizon) where developer held role.

        scope is "file" (key = repository path) or "module" (key = module id).
        """
        if scope == "file":
            events = self._file_events.get((developer, key, role))
        elif scope == "module":
            events = self._module_events.get((developer, key, role))
        else:
            raise ValueError(f"unknown scope {scope!r}")
        if not events:
            return 0
        return bisect_left(events, horizon) - bisect_left(events, window_start)

    def open_reviews(self, developer: str, role: Role, at: float) -> int:
        """Reviews created by `at` and not yet closed at `at` in which the
        developer holds the role (reviewer participation at any time
        qualifies the review)."""
        opened = self._opened.get((developer, role))
        if not opened:
            return 0
        closed = self._closed[(developer, role)]
        return bisect_right(opened, at) - bisect_right(closed, at)

    # -- organizational lookups ---------------------------------------------

    def org_lookup(self, developer: str, at: float) -> OrgView:
        for valid_from, valid_to, team, location, manager in self._org.get(developer, ()):
            if _covers(valid_from, valid_to, at):
                return OrgView(team, location, manager)
        raise NoAssignment(developer, at)

    def has_assignment(self, developer: str, at: float) -> bool:
        return any(_covers(vf, vt, at) for vf, vt, *_ in self._org.get(developer, ()))

    def employed_at(self, at: float) -> set[str]:
        return {dev for dev in self._org if self.has_assignment(dev, at)}

    def known_developers(self) -> tuple[str, ...]:
        return tuple(sorted(self._org))

    def maintainer_check(self, developer: str, module_id: str, at: float) -> bool:
        spans = self._maintainers.get((module_id, developer), ())
        return any(_covers(vf, vt, at) for vf, vt in spans)

    def team_modules(self, team_id: str, at: float) -> set[str]:
        return {
            module for module, vf, vt in self._team_modules.get(team_id, ()) if _covers(vf, vt, at)
        }


def build_index(corpus: Corpus, participation_rule: ParticipationRule = default_participation_rule) -> TemporalIndex:
    return TemporalIndex(corpus, participation_rule)
