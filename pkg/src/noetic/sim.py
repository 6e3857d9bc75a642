"""Headless 2-D obstacle-avoidance arena closing the loop on a two-class
BCI: announce the obstacle class, bind the first in-window decision, emit
feedback, and score.

Discrete-event by design: a session is a pure function of (config, decision
trace), so replaying a recorded trace reproduces every outcome exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import Marker
from .evaluate import itr_bits_per_selection

OUTCOMES = ("avoided", "hit", "timeout")
N_CLASSES = 2


@dataclass(frozen=True)
class SimConfig:
    n_obstacles: int
    inter_obstacle_s: float
    decision_window_s: float
    classes: Optional[Tuple[int, ...]] = None  # explicit sequence, else seeded
    seed: int = 0
    auditory_feedback: bool = True
    visual_feedback: bool = True

    def __post_init__(self):
        if self.n_obstacles < 1:
            raise ValueError("n_obstacles must be >= 1")
        if not self.inter_obstacle_s > self.decision_window_s > 0:
            raise ValueError("need inter_obstacle_s > decision_window_s > 0")
        if self.classes is not None:
            if len(self.classes) != self.n_obstacles:
                raise ValueError("explicit class sequence must cover every obstacle")
            if any(c not in (0, 1) for c in self.classes):
                raise ValueError("two-class arena: classes must be 0 or 1")
            object.__setattr__(self, "classes", tuple(int(c) for c in self.classes))

    def sequence(self) -> Tuple[int, ...]:
        if self.classes is not None:
            return self.classes
        half = (self.n_obstacles + 1) // 2
        base = np.array([0] * half + [1] * (self.n_obstacles - half))
        rng = np.random.default_rng(self.seed)
        return tuple(int(c) for c in rng.permutation(base))


@dataclass
class ObstacleRecord:
    index: int
    class_id: int
    announce_t: float
    decision: Optional[int] = None
    decision_t: Optional[float] = None
    outcome: Optional[str] = None

    def to_dict(self) -> dict:
        return {"index": self.index, "class_id": self.class_id,
                "announce_t": self.announce_t, "decision": self.decision,
                "decision_t": self.decision_t, "outcome": self.outcome}


class SimSession:
    """Single-owner session; step() must be called with nondecreasing time."""

    def __init__(self, config: SimConfig):
        self.config = config
        seq = config.sequence()
        self._records = [
            ObstacleRecord(k, seq[k], k * config.inter_obstacle_s)
            for k in range(config.n_obstacles)
        ]
        self.now = -np.inf
        self.trace: List[tuple] = []
        self.ignored_decisions = 0
        self._announced = 0
        self._resolved = 0
        self.finished = False

    def announce_markers(self) -> List[Marker]:
        return [Marker(r.announce_t, "obstacle", r.class_id) for r in self._records]

    def records(self) -> List[ObstacleRecord]:
        return list(self._records)

    def _feedback(self, rec: ObstacleRecord) -> dict:
        return {"type": "feedback", "index": rec.index, "outcome": rec.outcome,
                "auditory": self.config.auditory_feedback,
                "visual": self.config.visual_feedback, "t": self.now}

    def step(self, now_s: float, decision: Optional[int] = None) -> List[dict]:
        """Advance the clock, bind an optional decision, resolve closed windows."""
        if self.finished:
            raise ValueError("session already finished")
        if now_s < self.now:
            raise ValueError("time must be nondecreasing")
        self.now = now_s
        self.trace.append((float(now_s), None if decision is None else int(decision)))
        events: List[dict] = []
        window = self.config.decision_window_s
        while (self._announced < len(self._records)
               and self._records[self._announced].announce_t <= now_s):
            rec = self._records[self._announced]
            events.append({"type": "announce", "index": rec.index,
                           "class_id": rec.class_id, "t": rec.announce_t})
            self._announced += 1
        if decision is not None:
            bound = False
            for rec in self._records[self._resolved:self._announced]:
                in_window = rec.announce_t <= now_s <= rec.announce_t + window
                if in_window and rec.outcome is None and rec.decision is None:
                    rec.decision = int(decision)  # first decision wins
                    rec.decision_t = float(now_s)
                    bound = True
                    break
            if not bound:
                self.ignored_decisions += 1
        events.extend(self._resolve(now_s))
        return events

    def _resolve(self, now_s: float) -> List[dict]:
        events = []
        window = self.config.decision_window_s
        while self._resolved < self._announced:
            rec = self._records[self._resolved]
            if rec.announce_t + window > now_s:  # outcomes wait for window close
                break
            if rec.decision is None:
                rec.outcome = "timeout"
            elif rec.decision == rec.class_id:
                rec.outcome = "avoided"
            else:
                rec.outcome = "hit"
            events.append({"type": "outcome", "index": rec.index,
                           "outcome": rec.outcome, "t": now_s})
            events.append(self._feedback(rec))
            self._resolved += 1
        return events

    def finish(self) -> List[dict]:
        """Close every remaining window (unannounced obstacles time out)."""
        if self.finished:
            return []
        end = (self.config.n_obstacles - 1) * self.config.inter_obstacle_s \
            + self.config.decision_window_s
        events = self.step(max(end, self.now), None) if end > self.now else []
        self._announced = len(self._records)
        events += self._resolve(np.inf)
        self.finished = True
        return events

    def complete(self) -> bool:
        return all(r.outcome is not None for r in self._records)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n"
                       for r in self._records)


def score(session: SimSession) -> dict:
    """Outcome counts, accuracy, and ITR in bits/min (Wolpaw bits at N=2
    times 60 / inter_obstacle_s selections per minute)."""
    counts = {o: 0 for o in OUTCOMES}
    for r in session.records():
        if r.outcome is not None:
            counts[r.outcome] += 1
    n = session.config.n_obstacles
    accuracy = counts["avoided"] / n
    per_min = 60.0 / session.config.inter_obstacle_s
    return {
        **counts,
        "accuracy": accuracy,
        "itr_bits_per_min": itr_bits_per_selection(N_CLASSES, accuracy) * per_min,
        "partial": not session.complete(),
    }


def replay_trace(config: SimConfig, trace: Sequence[tuple]) -> SimSession:
    """Re-run a recorded (t, decision) trace; outcomes reproduce exactly."""
    session = SimSession(config)
    for t, decision in trace:
        session.step(t, decision)
    session.finish()
    return session
