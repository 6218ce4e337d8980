"""DSCQS session planning and the vote log.

A plan presents every (scene, configuration) stimulus exactly once as a
basic test cell (A, grey, B, grey, A, grey, B, vote), pseudo-randomly
ordered so that consecutive cells never repeat a scene, with the hidden
reference assigned to side A or B in balanced fashion. Splitting into
sessions keeps sizes within one of each other.
"""

from __future__ import annotations

import csv
import json
import os
import random
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import NamedTuple, Sequence

from .catalog import ConfigId, Pvs, scene_configs
from .subjective import VoteRecord

PHASES = ("A", "grey", "B", "grey", "A", "grey", "B", "vote")

SCALE_LABELS = ("Bad", "Poor", "Fair", "Good", "Excellent")

VOTE_COLUMNS = ("observer_id", "btc_index", "score_a", "score_b", "timestamp")


class PlanError(RuntimeError):
    pass


@dataclass(frozen=True)
class BtcTiming:
    clip_seconds: float = 10.0
    grey_seconds: float = 3.0
    vote_seconds: float = 10.0

    def __post_init__(self):
        if min(self.clip_seconds, self.grey_seconds, self.vote_seconds) <= 0:
            raise ValueError("all phase durations must be positive")

    @property
    def btc_seconds(self) -> float:
        return 4 * self.clip_seconds + 3 * self.grey_seconds + self.vote_seconds

    def phase_seconds(self, phase: str) -> float:
        if phase in ("A", "B"):
            return self.clip_seconds
        if phase == "grey":
            return self.grey_seconds
        return self.vote_seconds


@dataclass(frozen=True)
class Btc:
    """One basic test cell: a hidden-reference pair for a single stimulus."""

    btc_index: int
    scene_id: str
    config: ConfigId
    a_is_reference: bool


@dataclass
class SessionPlan:
    seed: int
    sessions: list[list[Btc]]
    timing: BtcTiming = field(default_factory=BtcTiming)

    def __post_init__(self):
        self._by_index = {b.btc_index: b for s in self.sessions for b in s}

    def all_btcs(self) -> list[Btc]:
        return [b for s in self.sessions for b in s]

    def btc(self, index: int) -> Btc | None:
        return self._by_index.get(index)

    def session_minutes(self, session: Sequence[Btc]) -> float:
        return len(session) * self.timing.btc_seconds / 60.0

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "timing": {
                "clip_seconds": self.timing.clip_seconds,
                "grey_seconds": self.timing.grey_seconds,
                "vote_seconds": self.timing.vote_seconds,
            },
            "phase_order": list(PHASES),
            "session_minutes": [self.session_minutes(s) for s in self.sessions],
            "sessions": [[{
                "btc_index": b.btc_index,
                "scene_id": b.scene_id,
                "config": b.config.label,
                "a_is_reference": b.a_is_reference,
            } for b in session] for session in self.sessions],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SessionPlan":
        timing = BtcTiming(**data["timing"])
        sessions = [[Btc(b["btc_index"], b["scene_id"],
                         ConfigId.parse(b["config"]), b["a_is_reference"])
                     for b in session] for session in data["sessions"]]
        return cls(seed=data["seed"], sessions=sessions, timing=timing)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SessionPlan":
        return cls.from_json(json.loads(Path(path).read_text()))


def _ordered_stimuli(catalog: Sequence[Pvs]) -> list[tuple[str, ConfigId]]:
    expected = {c.label for c in scene_configs()}
    by_scene: dict[str, set[str]] = {}
    for pvs in catalog:
        by_scene.setdefault(pvs.scene_id, set()).add(pvs.config.label)
    for scene_id, labels in sorted(by_scene.items()):
        if labels != expected:
            missing = sorted(expected - labels)
            raise PlanError(f"scene {scene_id!r} incomplete: missing {missing}")
    return sorted((p.scene_id, p.config) for p in catalog)


def plan_sessions(catalog: Sequence[Pvs], n_sessions: int, seed: int,
                  timing: BtcTiming | None = None,
                  allow_adjacent_scenes: bool = False,
                  max_attempts: int = 2000) -> SessionPlan:
    """Build a deterministic pseudo-random presentation plan.

    Ordering is a randomized greedy walk that never schedules the same
    scene twice in a row (also across session boundaries) unless
    allow_adjacent_scenes is set; it restarts on dead ends up to
    max_attempts times before failing.
    """
    if n_sessions < 1:
        raise PlanError("n_sessions must be >= 1")
    timing = timing or BtcTiming()
    stimuli = _ordered_stimuli(catalog)
    n = len(stimuli)

    scene_counts: dict[str, int] = {}
    for scene_id, _ in stimuli:
        scene_counts[scene_id] = scene_counts.get(scene_id, 0) + 1
    if not allow_adjacent_scenes and max(scene_counts.values()) > (n + 1) // 2:
        dominant = max(scene_counts, key=scene_counts.get)
        raise PlanError(
            f"cannot avoid adjacent repeats: scene {dominant!r} provides "
            f"{scene_counts[dominant]} of {n} cells (more than half)")

    rng = random.Random(seed)
    order: list[tuple[str, ConfigId]] | None = None
    for _ in range(max_attempts):
        remaining = list(stimuli)
        walk: list[tuple[str, ConfigId]] = []
        while remaining:
            if allow_adjacent_scenes or not walk:
                candidates = remaining
            else:
                previous_scene = walk[-1][0]
                candidates = [s for s in remaining if s[0] != previous_scene]
            if not candidates:
                break
            choice = rng.choice(candidates)
            remaining.remove(choice)
            walk.append(choice)
        if len(walk) == n:
            order = walk
            break
    if order is None:
        raise PlanError(
            f"no scene-adjacency-free ordering found in {max_attempts} attempts")

    flags = [True] * ((n + 1) // 2) + [False] * (n // 2)
    rng.shuffle(flags)
    btcs = [Btc(i, scene_id, config, flags[i])
            for i, (scene_id, config) in enumerate(order)]

    base, extra = divmod(n, n_sessions)
    sessions = []
    start = 0
    for k in range(n_sessions):
        size = base + (1 if k < extra else 0)
        sessions.append(btcs[start:start + size])
        start += size
    return SessionPlan(seed=seed, sessions=sessions, timing=timing)


class ScaleScore(NamedTuple):
    score: float
    label: str


def scale_to_score(mark_fraction: float) -> ScaleScore:
    """Convert a mark on the continuous vertical scale (0 bottom, 1 top)
    to a 0-100 score plus its quality-segment label."""
    if not 0.0 <= mark_fraction <= 1.0:
        raise ValueError(f"mark fraction {mark_fraction} outside [0, 1]")
    score = 100.0 * mark_fraction
    segment = min(int(score // 20), len(SCALE_LABELS) - 1)
    return ScaleScore(score, SCALE_LABELS[segment])


def _format_score(score: float) -> str:
    return str(int(score)) if float(score).is_integer() else repr(float(score))


def append_vote(path: str | Path, vote: VoteRecord) -> None:
    """Append one vote to the line-delimited store, creating it with a header."""
    path = Path(path)
    new_file = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new_file:
            w.writerow(VOTE_COLUMNS)
        w.writerow([vote.observer_id, vote.btc_index,
                    _format_score(vote.score_a), _format_score(vote.score_b),
                    vote.timestamp.isoformat()])
        fh.flush()
        os.fsync(fh.fileno())


def export_votes(path: str | Path) -> list[VoteRecord]:
    """Read the vote store back; an absent or empty store is an empty list."""
    path = Path(path)
    if not path.exists() or path.stat().st_size == 0:
        return []
    return import_votes(path)


def import_votes(path: str | Path) -> list[VoteRecord]:
    path = Path(path)
    votes = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or not any(cell.strip() for cell in row):
                continue
            if lineno == 1:
                if [c.strip() for c in row] != list(VOTE_COLUMNS):
                    raise ValueError(
                        f"{path}:1: expected header {','.join(VOTE_COLUMNS)}")
                continue
            if len(row) != len(VOTE_COLUMNS):
                raise ValueError(f"{path}:{lineno}: expected {len(VOTE_COLUMNS)} "
                                 f"fields, got {len(row)}")
            try:
                votes.append(VoteRecord(
                    observer_id=row[0],
                    btc_index=int(row[1]),
                    score_a=float(row[2]),
                    score_b=float(row[3]),
                    timestamp=datetime.fromisoformat(row[4]),
                ))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return votes
