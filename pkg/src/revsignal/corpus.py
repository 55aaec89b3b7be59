"""Interchange data model for code-review and organizational records.

Three line-delimited JSON files (reviews, org assignments, modules) are
loaded into an immutable ``Corpus``. Validation enforces referential
integrity, interval sanity, and LOC consistency; ``filter_corpus`` applies
the dataset cleaning rules (LOC cap, stale-review cap, bot removal,
non-code module removal).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

SECONDS_PER_DAY = 86_400
THIRTY_DAYS = 30 * SECONDS_PER_DAY

REVIEW_STATUSES = ("merged", "abandoned", "open")
MODULE_CATEGORIES = ("code", "documentation", "iac", "third_party")


class CorpusError(Exception):
    """Base class for corpus loading/validation failures."""


class MalformedRecord(CorpusError):
    def __init__(self, source: str, line_no: int, reason: str):
        self.source = source
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{source}:{line_no}: {reason}")


class DanglingReference(CorpusError):
    def __init__(self, ref_id: str, context: str = ""):
        self.ref_id = ref_id
        suffix = f" ({context})" if context else ""
        super().__init__(f"unresolved reference {ref_id!r}{suffix}")


class OverlappingInterval(CorpusError):
    def __init__(self, entity_id: str):
        self.entity_id = entity_id
        super().__init__(f"overlapping validity intervals for {entity_id!r}")


class CorpusWarning(UserWarning):
    """Non-fatal data repairs performed during validation."""


@dataclass(frozen=True)
class FileChange:
    path: str
    lines_added: int
    lines_deleted: int


@dataclass(frozen=True)
class Comment:
    commenter_id: str
    timestamp: int
    is_bot: bool = False


@dataclass(frozen=True)
class ReviewRecord:
    review_id: str
    module_id: str
    author_id: str
    created_at: int
    closed_at: int | None
    status: str
    files: tuple[FileChange, ...]
    changed_loc: int
    comments: tuple[Comment, ...]
    is_bot_authored: bool = False

    @property
    def duration(self) -> int | None:
        if self.closed_at is None:
            return None
        return self.closed_at - self.created_at

    def is_open_at(self, t: float) -> bool:
        return self.created_at <= t and (self.closed_at is None or self.closed_at > t)


@dataclass(frozen=True)
class OrgAssignment:
    developer_id: str
    team_id: str
    manager_id: str
    location_id: str
    valid_from: int
    valid_to: int | None = None  # None = still valid

    def covers(self, t: float) -> bool:
        return self.valid_from <= t and (self.valid_to is None or t < self.valid_to)


@dataclass(frozen=True)
class OwnershipInterval:
    team_id: str
    valid_from: int
    valid_to: int | None = None


@dataclass(frozen=True)
class MaintainerInterval:
    developer_id: str
    valid_from: int
    valid_to: int | None = None


@dataclass(frozen=True)
class ModuleRecord:
    module_id: str
    owning_team_intervals: tuple[OwnershipInterval, ...]
    maintainer_intervals: tuple[MaintainerInterval, ...]
    category: str = "code"


@dataclass(frozen=True)
class Corpus:
    reviews: tuple[ReviewRecord, ...]
    assignments: tuple[OrgAssignment, ...]
    modules: tuple[ModuleRecord, ...]

    def span(self) -> tuple[int, int]:
        """(first created_at, last event timestamp) over all reviews."""
        if not self.reviews:
            return (0, 0)
        start = self.reviews[0].created_at
        end = start
        for r in self.reviews:
            end = max(end, r.created_at, r.closed_at or r.created_at)
        return (start, end)


@dataclass(frozen=True)
class FilterConfig:
    max_loc: int = 5000
    max_duration: int = THIRTY_DAYS  # seconds; 30 days exactly
    keep_bots: bool = False


# ---------------------------------------------------------------------------
# Parsing


def _require(obj: dict, key: str, source: str, line_no: int):
    if key not in obj:
        raise MalformedRecord(source, line_no, f"missing field {key!r}")
    return obj[key]


def _as_count(value, name: str, source: str, line_no: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise MalformedRecord(source, line_no, f"{name} must be a non-negative integer, got {value!r}")
    return value


def _as_time(value, name: str, source: str, line_no: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise MalformedRecord(source, line_no, f"{name} must be a finite epoch timestamp, got {value!r}")
    return int(value)


def _as_id(value, name: str, source: str, line_no: int) -> str:
    if not isinstance(value, str) or not value:
        raise MalformedRecord(source, line_no, f"{name} must be a non-empty string, got {value!r}")
    return value


def _parse_review(obj: dict, source: str, line_no: int) -> ReviewRecord:
    review_id = _as_id(_require(obj, "review_id", source, line_no), "review_id", source, line_no)
    module_id = _as_id(_require(obj, "module_id", source, line_no), "module_id", source, line_no)
    author_id = _as_id(_require(obj, "author_id", source, line_no), "author_id", source, line_no)
    created_at = _as_time(_require(obj, "created_at", source, line_no), "created_at", source, line_no)
    closed_raw = obj.get("closed_at")
    closed_at = None if closed_raw is None else _as_time(closed_raw, "closed_at", source, line_no)
    status = _require(obj, "status", source, line_no)
    if status not in REVIEW_STATUSES:
        raise MalformedRecord(source, line_no, f"unknown status {status!r}")
    if (closed_at is None) != (status == "open"):
        raise MalformedRecord(source, line_no, "closed_at must be absent exactly for open reviews")
    if closed_at is not None and closed_at < created_at:
        raise MalformedRecord(source, line_no, "closed_at precedes created_at")

    files = []
    for fobj in obj.get("files", []):
        if not isinstance(fobj, dict):
            raise MalformedRecord(source, line_no, "file entry must be an object")
        path = _as_id(_require(fobj, "path", source, line_no), "path", source, line_no)
        files.append(
            FileChange(
                path=path,
                lines_added=_as_count(_require(fobj, "lines_added", source, line_no), "lines_added", source, line_no),
                lines_deleted=_as_count(
                    _require(fobj, "lines_deleted", source, line_no), "lines_deleted", source, line_no
                ),
            )
        )

    comments = []
    for cobj in obj.get("comments", []):
        if not isinstance(cobj, dict):
            raise MalformedRecord(source, line_no, "comment entry must be an object")
        ts = _as_time(_require(cobj, "timestamp", source, line_no), "timestamp", source, line_no)
        if ts < created_at or (closed_at is not None and ts > closed_at):
            raise MalformedRecord(source, line_no, "comment timestamp outside review lifetime")
        comments.append(
            Comment(
                commenter_id=_as_id(
                    _require(cobj, "commenter_id", source, line_no), "commenter_id", source, line_no
                ),
                timestamp=ts,
                is_bot=bool(cobj.get("is_bot", False)),
            )
        )

    changed_loc = _as_count(
        obj.get("changed_loc", sum(f.lines_added + f.lines_deleted for f in files)),
        "changed_loc",
        source,
        line_no,
    )
    file_sum = sum(f.lines_added + f.lines_deleted for f in files)
    if changed_loc != file_sum:
        # ChangedLOC must stay consistent with the per-file sums it feeds.
        warnings.warn(
            f"{source}:{line_no}: changed_loc {changed_loc} != file sum {file_sum} "
            f"for review {review_id!r}; recomputed from files",
            CorpusWarning,
            stacklevel=3,
        )
        changed_loc = file_sum

    return ReviewRecord(
        review_id=review_id,
        module_id=module_id,
        author_id=author_id,
        created_at=created_at,
        closed_at=closed_at,
        status=status,
        files=tuple(files),
        changed_loc=changed_loc,
        comments=tuple(comments),
        is_bot_authored=bool(obj.get("is_bot_authored", False)),
    )


def _parse_assignment(obj: dict, source: str, line_no: int) -> OrgAssignment:
    valid_from = _as_time(_require(obj, "valid_from", source, line_no), "valid_from", source, line_no)
    raw_to = obj.get("valid_to")
    valid_to = None if raw_to is None else _as_time(raw_to, "valid_to", source, line_no)
    if valid_to is not None and valid_to <= valid_from:
        raise MalformedRecord(source, line_no, "valid_to must exceed valid_from")
    return OrgAssignment(
        developer_id=_as_id(_require(obj, "developer_id", source, line_no), "developer_id", source, line_no),
        team_id=_as_id(_require(obj, "team_id", source, line_no), "team_id", source, line_no),
        manager_id=_as_id(_require(obj, "manager_id", source, line_no), "manager_id", source, line_no),
        location_id=_as_id(_require(obj, "location_id", source, line_no), "location_id", source, line_no),
        valid_from=valid_from,
        valid_to=valid_to,
    )


def _parse_interval(obj: dict, id_key: str, source: str, line_no: int) -> tuple[str, int, int | None]:
    entity = _as_id(_require(obj, id_key, source, line_no), id_key, source, line_no)
    valid_from = _as_time(_require(obj, "valid_from", source, line_no), "valid_from", source, line_no)
    raw_to = obj.get("valid_to")
    valid_to = None if raw_to is None else _as_time(raw_to, "valid_to", source, line_no)
    if valid_to is not None and valid_to <= valid_from:
        raise MalformedRecord(source, line_no, "valid_to must exceed valid_from")
    return entity, valid_from, valid_to


def _parse_module(obj: dict, source: str, line_no: int) -> ModuleRecord:
    module_id = _as_id(_require(obj, "module_id", source, line_no), "module_id", source, line_no)
    category = obj.get("category", "code")
    if category not in MODULE_CATEGORIES:
        raise MalformedRecord(source, line_no, f"unknown module category {category!r}")
    owning = tuple(
        OwnershipInterval(*_parse_interval(o, "team_id", source, line_no))
        for o in obj.get("owning_team_intervals", [])
    )
    maintainers = tuple(
        MaintainerInterval(*_parse_interval(o, "developer_id", source, line_no))
        for o in obj.get("maintainer_intervals", [])
    )
    return ModuleRecord(
        module_id=module_id,
        owning_team_intervals=owning,
        maintainer_intervals=maintainers,
        category=category,
    )


def _read_lines(path: str | Path, parse, source: str) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(source, line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise MalformedRecord(source, line_no, "record must be a JSON object")
            out.append(parse(obj, source, line_no))
    return out


# ---------------------------------------------------------------------------
# Validation


def _check_disjoint(intervals: list[tuple[int, int | None]], entity_id: str):
    """Intervals are half-open [from, to); None = unbounded right end."""
    spans = sorted(intervals, key=lambda iv: iv[0])
    for (from_a, to_a), (from_b, _to_b) in zip(spans, spans[1:]):
        if to_a is None or from_b < to_a:
            raise OverlappingInterval(entity_id)


def validate_corpus(corpus: Corpus) -> None:
    """Raise on any violated corpus invariant (referential or interval)."""
    by_dev: dict[str, list[tuple[int, int | None]]] = {}
    for a in corpus.assignments:
        by_dev.setdefault(a.developer_id, []).append((a.valid_from, a.valid_to))
    for dev, spans in by_dev.items():
        _check_disjoint(spans, dev)

    module_ids = set()
    for m in corpus.modules:
        if m.module_id in module_ids:
            raise OverlappingInterval(m.module_id)
        module_ids.add(m.module_id)
        _check_disjoint([(o.valid_from, o.valid_to) for o in m.owning_team_intervals], m.module_id)
        per_dev: dict[str, list[tuple[int, int | None]]] = {}
        for iv in m.maintainer_intervals:
            per_dev.setdefault(iv.developer_id, []).append((iv.valid_from, iv.valid_to))
        for dev, spans in per_dev.items():
            _check_disjoint(spans, f"{m.module_id}/{dev}")

    seen_reviews = set()
    for r in corpus.reviews:
        if r.review_id in seen_reviews:
            raise MalformedRecord("reviews", 0, f"duplicate review_id {r.review_id!r}")
        seen_reviews.add(r.review_id)
        if r.module_id not in module_ids:
            raise DanglingReference(r.module_id, f"module of review {r.review_id}")
        if r.author_id not in by_dev:
            raise DanglingReference(r.author_id, f"author of review {r.review_id}")
        for c in r.comments:
            if c.commenter_id not in by_dev:
                raise DanglingReference(c.commenter_id, f"commenter on review {r.review_id}")


def load_corpus(reviews_path: str | Path, org_path: str | Path, modules_path: str | Path) -> Corpus:
    """Load, validate, and chronologically sort the three interchange files."""
    reviews = _read_lines(reviews_path, _parse_review, "reviews")
    assignments = _read_lines(org_path, _parse_assignment, "org")
    modules = _read_lines(modules_path, _parse_module, "modules")
    reviews.sort(key=lambda r: (r.created_at, r.review_id))
    corpus = Corpus(reviews=tuple(reviews), assignments=tuple(assignments), modules=tuple(modules))
    validate_corpus(corpus)
    return corpus


# ---------------------------------------------------------------------------
# Serialization (round-trips with load_corpus)


def _review_to_obj(r: ReviewRecord) -> dict:
    obj = {
        "review_id": r.review_id,
        "module_id": r.module_id,
        "author_id": r.author_id,
        "created_at": r.created_at,
        "status": r.status,
        "files": [
            {"path": f.path, "lines_added": f.lines_added, "lines_deleted": f.lines_deleted} for f in r.files
        ],
        "changed_loc": r.changed_loc,
        "comments": [
            {"commenter_id": c.commenter_id, "timestamp": c.timestamp, "is_bot": c.is_bot} for c in r.comments
        ],
        "is_bot_authored": r.is_bot_authored,
    }
    if r.closed_at is not None:
        obj["closed_at"] = r.closed_at
    return obj


def _assignment_to_obj(a: OrgAssignment) -> dict:
    obj = {
        "developer_id": a.developer_id,
        "team_id": a.team_id,
        "manager_id": a.manager_id,
        "location_id": a.location_id,
        "valid_from": a.valid_from,
    }
    if a.valid_to is not None:
        obj["valid_to"] = a.valid_to
    return obj


def _module_to_obj(m: ModuleRecord) -> dict:
    def iv(entity_key, entity, vf, vt):
        o = {entity_key: entity, "valid_from": vf}
        if vt is not None:
            o["valid_to"] = vt
        return o

    return {
        "module_id": m.module_id,
        "owning_team_intervals": [
            iv("team_id", o.team_id, o.valid_from, o.valid_to) for o in m.owning_team_intervals
        ],
        "maintainer_intervals": [
            iv("developer_id", o.developer_id, o.valid_from, o.valid_to) for o in m.maintainer_intervals
        ],
        "category": m.category,
    }


def save_corpus(corpus: Corpus, reviews_path: str | Path, org_path: str | Path, modules_path: str | Path) -> None:
    for path, objs in (
        (reviews_path, map(_review_to_obj, corpus.reviews)),
        (org_path, map(_assignment_to_obj, corpus.assignments)),
        (modules_path, map(_module_to_obj, corpus.modules)),
    ):
        with open(path, "w", encoding="utf-8") as fh:
            for obj in objs:
                fh.write(json.dumps(obj, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Filtering


def filter_corpus(corpus: Corpus, rules: FilterConfig = FilterConfig()) -> Corpus:
    """Apply the dataset cleaning rules; pure, idempotent.

    Drops reviews in non-code modules, oversized changes (changed_loc >
    max_loc), closed reviews that outlived max_duration, and bot-authored
    reviews; strips bot comments from the survivors. Bot handling is skipped
    when rules.keep_bots is set.
    """
    category = {m.module_id: m.category for m in corpus.modules}
    kept: list[ReviewRecord] = []
    for r in corpus.reviews:
        if category.get(r.module_id) in ("documentation", "iac", "third_party"):
            continue
        if r.changed_loc > rules.max_loc:
            continue
        if r.closed_at is not None and r.closed_at - r.created_at > rules.max_duration:
            continue
        if not rules.keep_bots:
            if r.is_bot_authored:
                continue
            if any(c.is_bot for c in r.comments):
                r = replace(r, comments=tuple(c for c in r.comments if not c.is_bot))
        kept.append(r)
    return Corpus(reviews=tuple(kept), assignments=corpus.assignments, modules=corpus.modules)
