"""Deterministic stimulus/marker timelines: ERP (incl. oddball), SSVEP
flicker toggles, and calibration beeps.

Timelines are plain data; rendering and audio belong to presenters. The
total ERP experiment duration is (cue + buffer) * trials + fixation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .core import Marker

RARE_WEIGHT = 0.2  # classes at or below this weight get adjacency hygiene


@dataclass(frozen=True)
class ErpScheduleSpec:
    cue_time_s: float
    buffer_time_s: float
    fixation_time_s: float
    n_classes: int
    trial_count: int
    weights: Tuple[float, ...]
    seed: int = 0

    def __post_init__(self):
        for name in ("cue_time_s", "buffer_time_s", "fixation_time_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.trial_count < 1:
            raise ValueError("trial_count must be >= 1")
        if len(self.weights) != self.n_classes:
            raise ValueError("need one weight per class")
        if any(w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))


@dataclass(frozen=True)
class SsvepScheduleSpec:
    stimuli: Tuple[Tuple[str, float], ...]  # (label, flicker frequency Hz)
    duration_s: float

    def __post_init__(self):
        freqs = [f for _, f in self.stimuli]
        if any(f <= 0 for f in freqs):
            raise ValueError("flicker frequencies must be > 0")
        if len(set(freqs)) != len(freqs):
            raise ValueError("flicker frequencies must be pairwise distinct")
        if not self.duration_s > 0:
            raise ValueError("duration_s must be > 0")


@dataclass(frozen=True)
class TimelineEvent:
    t_on: float
    t_off: float
    label: str
    class_id: Optional[int] = None


@dataclass(frozen=True)
class StimulusTimeline:
    events: Tuple[TimelineEvent, ...]
    total_duration_s: float

    def markers(self) -> List[Marker]:
        return [Marker(e.t_on, e.label, e.class_id) for e in self.events]


def schedule_duration(spec: ErpScheduleSpec) -> float:
    return (spec.cue_time_s + spec.buffer_time_s) * spec.trial_count + spec.fixation_time_s


def apportion_counts(weights: Sequence[float], total: int) -> List[int]:
    """Largest-remainder apportionment of ``total`` over ``weights``."""
    quotas = np.asarray(weights, dtype=np.float64) * total
    counts = np.floor(quotas).astype(int)
    remainder = total - int(counts.sum())
    if remainder:
        order = np.argsort(-(quotas - counts), kind="stable")
        for i in order[:remainder]:
            counts[i] += 1
    return counts.tolist()


def _fix_rare_adjacency(order: List[int], rare: set) -> List[int]:
    """Swap away repeats of rare classes where a legal swap exists."""
    order = list(order)
    n = len(order)
    for i in range(1, n):
        if order[i] != order[i - 1] or order[i] not in rare:
            continue
        for j in range(n):
            if order[j] == order[i]:
                continue
            # simulate the swap and check both neighborhoods stay clean
            oi, oj = order[j], order[i]
            left_i = order[i - 1] if i - 1 != j else oj
            right_i = (order[i + 1] if i + 1 < n else None)
            if i + 1 == j:
                right_i = oj
            ok_i = (oi not in rare) or (oi != left_i and oi != right_i)
            left_j = order[j - 1] if j - 1 >= 0 else None
            if j - 1 == i:
                left_j = oi
            right_j = order[j + 1] if j + 1 < n else None
            if j + 1 == i:
                right_j = oi
            ok_j = not (oj in rare and (oj == left_j or oj == right_j))
            if ok_i and ok_j:
                order[i], order[j] = order[j], order[i]
                break
    return order


def build_erp_schedule(spec: ErpScheduleSpec) -> StimulusTimeline:
    """Seeded shuffle of the apportioned class sequence on the Eq-timed grid.

    Classes with weight <= 0.2 are kept non-adjacent to themselves when a
    swap can achieve it (standard oddball hygiene).
    """
    counts = apportion_counts(spec.weights, spec.trial_count)
    order = [c for c, k in enumerate(counts) for _ in range(k)]
    rng = np.random.default_rng(spec.seed)
    order = list(rng.permutation(order))
    rare = {c for c, w in enumerate(spec.weights) if w <= RARE_WEIGHT}
    if rare:
        order = _fix_rare_adjacency(order, rare)
    step = spec.cue_time_s + spec.buffer_time_s
    events = tuple(
        TimelineEvent(
            t_on=spec.fixation_time_s + k * step,
            t_off=spec.fixation_time_s + k * step + spec.cue_time_s,
            label=f"class-{c}",
            class_id=int(c),
        )
        for k, c in enumerate(order)
    )
    return StimulusTimeline(events, schedule_duration(spec))


def build_ssvep_schedule(spec: SsvepScheduleSpec) -> StimulusTimeline:
    """Flicker toggle events per stimulus at half-period spacing.

    Stimuli run concurrently, so events from different labels may overlap.
    """
    events = []
    for class_id, (label, freq) in enumerate(spec.stimuli):
        half = 1.0 / (2.0 * freq)
        n_toggles = int(np.floor(2.0 * freq * spec.duration_s))
        for k in range(n_toggles):
            t = k * half
            events.append(TimelineEvent(t, t, f"{label}:toggle", class_id))
    events.sort(key=lambda e: (e.t_on, e.class_id))
    return StimulusTimeline(tuple(events), spec.duration_s)


def build_calibration_schedule(n_beeps: int, interval_s: float) -> StimulusTimeline:
    """Beeps at k * interval prompting the subject to blink on cue."""
    if n_beeps < 1:
        raise ValueError("n_beeps must be >= 1")
    if not interval_s > 0:
        raise ValueError("interval_s must be > 0")
    events = tuple(
        TimelineEvent(k * interval_s, k * interval_s, "beep") for k in range(n_beeps)
    )
    return StimulusTimeline(events, (n_beeps - 1) * interval_s)
