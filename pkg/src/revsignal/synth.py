"""Seeded synthetic corpus generator with a known generative model.

Reviews are generated chronologically. For each (review, candidate) pair the
true participation probability is sigmoid(w . z + b) over the standardized
feature vector z at that instant, and participants' comment counts follow
log10(1 + c) = v . z + v0 + Gaussian noise. Standardization uses running
statistics frozen after a warm-up prefix (first 10% of reviews); count
features look back over a fixed rolling window so the stream is stationary
once that window fills. The exact probabilities and expected feedback values
are recorded as ground truth, including the Bayes-optimal AUPRC achievable
on the realized labels.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import (
    Comment,
    Corpus,
    FileChange,
    MaintainerInterval,
    ModuleRecord,
    OrgAssignment,
    OwnershipInterval,
    ReviewRecord,
)
from .features import FEATURE_NAMES
from .metrics import average_precision

SECONDS_PER_DAY = 86_400
GROUND_TRUTH_FORMAT = "revsignal-groundtruth/1"


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


@dataclass(frozen=True)
class SynthConfig:
    n_developers: int = 30
    n_teams: int = 4
    n_locations: int = 2
    n_modules: int = 12
    n_files_per_module: int = 6
    span_days: float = 360.0
    reviews_per_day: float = 6.0
    participation_weights: dict[str, float] = field(default_factory=dict)
    participation_intercept: float = -3.0
    feedback_weights: dict[str, float] = field(default_factory=dict)
    feedback_intercept: float = 0.45
    feedback_noise_std: float = 0.05
    team_module_affinity: float = 0.75  # prob. the author picks a home-team module
    history_window_days: float = 90.0  # rolling window behind the generative count features
    seed: int = 0

    def __post_init__(self):
        for count in (self.n_developers, self.n_teams, self.n_locations, self.n_modules, self.n_files_per_module):
            if count < 1:
                raise ValueError("entity counts must be >= 1")
        for weights in (self.participation_weights, self.feedback_weights):
            unknown = set(weights) - set(FEATURE_NAMES)
            if unknown:
                raise ValueError(f"unknown feature weights: {sorted(unknown)}")
            if not all(math.isfinite(v) for v in weights.values()):
                raise ValueError("weights must be finite")

    def weight_vector(self, weights: dict[str, float]) -> np.ndarray:
        return np.array([weights.get(name, 0.0) for name in FEATURE_NAMES])


@dataclass(frozen=True)
class GroundTruthExample:
    review_id: str
    candidate_id: str
    probability: float
    expected_log_feedback: float
    post_freeze: bool


@dataclass
class GroundTruth:
    frozen_mean: np.ndarray
    frozen_std: np.ndarray
    participation_weights: np.ndarray
    participation_intercept: float
    feedback_weights: np.ndarray
    feedback_intercept: float
    feedback_noise_std: float
    history_window_days: float
    bayes_auprc: float | None
    examples: list[GroundTruthExample]
    _by_pair: dict[tuple[str, str], GroundTruthExample] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._by_pair:
            self._by_pair = {(e.review_id, e.candidate_id): e for e in self.examples}

    def lookup(self, review_id: str, candidate_id: str) -> GroundTruthExample:
        return self._by_pair[(review_id, candidate_id)]

    def probability_of(self, features: np.ndarray) -> float:
        """True participation probability for a raw feature vector."""
        z = (features - self.frozen_mean) / self.frozen_std
        return sigmoid(float(np.dot(self.participation_weights, z)) + self.participation_intercept)


class _RunningStats:
    """Welford accumulator over candidate feature vectors."""

    def __init__(self, dim: int):
        self.count = 0
        self.mean = np.zeros(dim)
        self._m2 = np.zeros(dim)
        self.frozen = False

    def update(self, x: np.ndarray):
        if self.frozen:
            return
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (x - self.mean)

    @property
    def std(self) -> np.ndarray:
        if self.count < 2:
            return np.ones_like(self.mean)
        s = np.sqrt(self._m2 / self.count)
        return np.where(s > 0, s, 1.0)


class _HistoryTracker:
    """Incremental feature bookkeeping; reviews are appended chronologically."""

    def __init__(self, org: dict[str, tuple[str, str]], maintainers: set[tuple[str, str]], team_modules: dict[str, list[str]]):
        self.org = org  # dev -> (team, location)
        self.maintainers = maintainers  # (module, dev)
        self.team_modules = team_modules
        self.file_events: dict[tuple[str, str, str], list[int]] = {}
        self.module_events: dict[tuple[str, str, str], list[int]] = {}
        self.opened: dict[tuple[str, str], list[int]] = {}
        self.closed: dict[tuple[str, str], list[float]] = {}

    def _count(self, events: dict, key, t: int, window_start: float) -> int:
        lst = events.get(key)
        if not lst:
            return 0
        return bisect_left(lst, t) - bisect_left(lst, window_start)

    def _open_count(self, dev: str, role: str, t: int) -> int:
        opened = self.opened.get((dev, role))
        if not opened:
            return 0
        return bisect_right(opened, t) - bisect_right(self.closed[(dev, role)], t)

    def features(self, review_module: str, review_files: list[str], changed_loc: int, author: str, candidate: str, t: int, window_start: float) -> np.ndarray:
        file_rev = sum(self._count(self.file_events, (candidate, p, "reviewer"), t, window_start) for p in review_files)
        file_aut = sum(self._count(self.file_events, (candidate, p, "author"), t, window_start) for p in review_files)
        mod_rev = self._count(self.module_events, (candidate, review_module, "reviewer"), t, window_start)
        mod_aut = self._count(self.module_events, (candidate, review_module, "author"), t, window_start)
        cand_team, cand_loc = self.org[candidate]
        author_team, author_loc = self.org[author]
        team_rev = sum(
            self._count(self.module_events, (candidate, m, "reviewer"), t, window_start)
            for m in self.team_modules[author_team]
        )
        team_aut = sum(
            self._count(self.module_events, (candidate, m, "author"), t, window_start)
            for m in self.team_modules[author_team]
        )
        return np.array(
            [
                float(changed_loc),
                float(file_rev),
                float(file_aut),
                float(mod_rev),
                float(mod_aut),
                1.0 if (review_module, candidate) in self.maintainers else 0.0,
                float(self._open_count(candidate, "author", t)),
                float(self._open_count(candidate, "reviewer", t)),
                1.0 if cand_team == author_team else 0.0,
                1.0 if cand_loc == author_loc else 0.0,
                float(team_rev),
                float(team_aut),
            ]
        )

    def append_review(self, review_id: str, module: str, files: list[str], author: str, reviewers: list[str], created: int, closed: int):
        for dev, role in [(author, "author")] + [(r, "reviewer") for r in reviewers]:
            for path in files:
                self.file_events.setdefault((dev, path, role), []).append(created)
            self.module_events.setdefault((dev, module, role), []).append(created)
            self.opened.setdefault((dev, role), []).append(created)
            insort(self.closed.setdefault((dev, role), []), closed)


def generate(config: SynthConfig) -> tuple[Corpus, GroundTruth]:
    rng = np.random.Generator(np.random.PCG64(config.seed))

    teams = [f"T{i:02d}" for i in range(config.n_teams)]
    locations = [f"L{i:02d}" for i in range(config.n_locations)]
    team_location = {team: locations[i % config.n_locations] for i, team in enumerate(teams)}
    developers = [f"D{i:03d}" for i in range(config.n_developers)]
    dev_team = {dev: teams[i % config.n_teams] for i, dev in enumerate(developers)}

    assignments = tuple(
        OrgAssignment(
            developer_id=dev,
            team_id=dev_team[dev],
            manager_id=f"mgr-{dev_team[dev]}",
            location_id=team_location[dev_team[dev]],
            valid_from=0,
            valid_to=None,
        )
        for dev in developers
    )

    modules = [f"M{i:03d}" for i in range(config.n_modules)]
    module_team = {m: teams[i % config.n_teams] for i, m in enumerate(modules)}
    team_devs = {team: [d for d in developers if dev_team[d] == team] for team in teams}
    team_mods = {team: [m for m in modules if module_team[m] == team] for team in teams}
    module_files = {m: [f"{m}/f{j}" for j in range(config.n_files_per_module)] for m in modules}

    maintainer_of = {}
    for m in modules:
        pool = team_devs[module_team[m]] or developers
        maintainer_of[m] = pool[int(rng.integers(0, len(pool)))]
    module_records = tuple(
        ModuleRecord(
            module_id=m,
            owning_team_intervals=(OwnershipInterval(module_team[m], 0, None),),
            maintainer_intervals=(MaintainerInterval(maintainer_of[m], 0, None),),
            category="code",
        )
        for m in modules
    )

    n_reviews = int(round(config.reviews_per_day * config.span_days))
    span_seconds = int(config.span_days * SECONDS_PER_DAY)
    created_times = np.sort(rng.integers(0, span_seconds, size=n_reviews))
    warmup = max(1, int(math.ceil(0.1 * n_reviews)))
    history_window = int(config.history_window_days * SECONDS_PER_DAY)

    w = config.weight_vector(config.participation_weights)
    b = config.participation_intercept
    v = config.weight_vector(config.feedback_weights)
    v0 = config.feedback_intercept

    tracker = _HistoryTracker(
        org={d: (dev_team[d], team_location[dev_team[d]]) for d in developers},
        maintainers={(m, maintainer_of[m]) for m in modules},
        team_modules=team_mods,
    )
    stats = _RunningStats(len(FEATURE_NAMES))

    reviews: list[ReviewRecord] = []
    gt_examples: list[GroundTruthExample] = []
    labels: list[bool] = []
    probabilities: list[float] = []

    for i in range(n_reviews):
        t = int(created_times[i])
        review_id = f"r{i:06d}"
        author = developers[int(rng.integers(0, config.n_developers))]
        home = team_mods[dev_team[author]]
        if home and rng.random() < config.team_module_affinity:
            module = home[int(rng.integers(0, len(home)))]
        else:
            module = modules[int(rng.integers(0, config.n_modules))]

        n_files = int(rng.integers(1, min(3, config.n_files_per_module) + 1))
        picked = rng.choice(config.n_files_per_module, size=n_files, replace=False)
        files = [module_files[module][int(j)] for j in sorted(picked)]
        file_changes = tuple(
            FileChange(path=p, lines_added=int(rng.integers(1, 120)), lines_deleted=int(rng.integers(0, 40)))
            for p in files
        )
        changed_loc = sum(f.lines_added + f.lines_deleted for f in file_changes)
        duration = int(math.exp(rng.uniform(math.log(3600), math.log(20 * SECONDS_PER_DAY))))
        closed = t + duration

        if i >= warmup:
            stats.frozen = True
        mean, std = stats.mean.copy(), stats.std.copy()
        window_start = t - history_window

        comments: list[Comment] = []
        reviewers: list[str] = []
        for candidate in developers:
            if candidate == author:
                continue
            x = tracker.features(module, files, changed_loc, author, candidate, t, window_start)
            z = (x - mean) / std
            p = sigmoid(float(np.dot(w, z)) + b)
            expected = float(np.dot(v, z)) + v0
            participated = bool(rng.random() < p)
            gt_examples.append(
                GroundTruthExample(
                    review_id=review_id,
                    candidate_id=candidate,
                    probability=p,
                    expected_log_feedback=expected,
                    post_freeze=stats.frozen,
                )
            )
            labels.append(participated)
            probabilities.append(p)
            stats.update(x)
            if participated:
                reviewers.append(candidate)
                raw = expected + float(rng.normal(0.0, config.feedback_noise_std))
                raw = min(max(raw, 0.0), 2.0)  # keeps counts in [0, 99]
                n_comments = max(1, int(math.floor(10.0**raw - 1.0 + 0.5)))
                times = sorted(int(u) for u in rng.integers(t, closed + 1, size=n_comments))
                comments.extend(Comment(commenter_id=candidate, timestamp=ts, is_bot=False) for ts in times)

        comments.sort(key=lambda c: (c.timestamp, c.commenter_id))
        reviews.append(
            ReviewRecord(
                review_id=review_id,
                module_id=module,
                author_id=author,
                created_at=t,
                closed_at=closed,
                status="merged",
                files=file_changes,
                changed_loc=changed_loc,
                comments=tuple(comments),
                is_bot_authored=False,
            )
        )
        tracker.append_review(review_id, module, files, author, reviewers, t, closed)

    reviews.sort(key=lambda r: (r.created_at, r.review_id))
    corpus = Corpus(reviews=tuple(reviews), assignments=assignments, modules=module_records)

    bayes = average_precision(labels, probabilities) if labels else None
    ground_truth = GroundTruth(
        frozen_mean=stats.mean.copy(),
        frozen_std=stats.std.copy(),
        participation_weights=w,
        participation_intercept=b,
        feedback_weights=v,
        feedback_intercept=v0,
        feedback_noise_std=config.feedback_noise_std,
        history_window_days=config.history_window_days,
        bayes_auprc=bayes,
        examples=gt_examples,
    )
    return corpus, ground_truth


def save_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    obj = {
        "format": GROUND_TRUTH_FORMAT,
        "feature_names": list(FEATURE_NAMES),
        "frozen_mean": gt.frozen_mean.tolist(),
        "frozen_std": gt.frozen_std.tolist(),
        "participation_weights": gt.participation_weights.tolist(),
        "participation_intercept": gt.participation_intercept,
        "feedback_weights": gt.feedback_weights.tolist(),
        "feedback_intercept": gt.feedback_intercept,
        "feedback_noise_std": gt.feedback_noise_std,
        "history_window_days": gt.history_window_days,
        "bayes_auprc": gt.bayes_auprc,
        "examples": [
            [e.review_id, e.candidate_id, e.probability, e.expected_log_feedback, e.post_freeze]
            for e in gt.examples
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)


def load_ground_truth(path: str | Path) -> GroundTruth:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != GROUND_TRUTH_FORMAT:
        raise ValueError(f"unsupported ground-truth format {obj.get('format')!r}")
    return GroundTruth(
        frozen_mean=np.array(obj["frozen_mean"]),
        frozen_std=np.array(obj["frozen_std"]),
        participation_weights=np.array(obj["participation_weights"]),
        participation_intercept=obj["participation_intercept"],
        feedback_weights=np.array(obj["feedback_weights"]),
        feedback_intercept=obj["feedback_intercept"],
        feedback_noise_std=obj["feedback_noise_std"],
        history_window_days=obj.get("history_window_days", 0.0),
        bayes_auprc=obj["bayes_auprc"],
        examples=[GroundTruthExample(*row) for row in obj["examples"]],
    )
