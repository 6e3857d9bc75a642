from collections import Counter

import numpy as np
import pytest

from noetic.stim import (ErpScheduleSpec, SsvepScheduleSpec, apportion_counts,
                         build_calibration_schedule, build_erp_schedule,
                         build_ssvep_schedule, schedule_duration)


def erp_spec(**kw):
    base = dict(cue_time_s=1.0, buffer_time_s=0.5, fixation_time_s=2.0,
                n_classes=2, trial_count=10, weights=(0.5, 0.5), seed=0)
    base.update(kw)
    return ErpScheduleSpec(**base)


class TestDuration:
    def test_direct_equation(self):
        assert schedule_duration(erp_spec()) == 17.0

    def test_long_run(self):
        spec = erp_spec(cue_time_s=0.2, buffer_time_s=0.8, trial_count=120,
                        fixation_time_s=5.0)
        assert schedule_duration(spec) == 125.0

    def test_zero_trials_rejected(self):
        with pytest.raises(ValueError, match="trial_count"):
            erp_spec(trial_count=0)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum"):
            erp_spec(weights=(0.5, 0.6))


class TestErpSchedule:
    def test_largest_remainder_counts(self):
        spec = erp_spec(n_classes=3, weights=(0.1, 0.1, 0.8), trial_count=20)
        timeline = build_erp_schedule(spec)
        counts = Counter(e.class_id for e in timeline.events)
        assert (counts[0], counts[1], counts[2]) == (2, 2, 16)

    def test_two_trials_one_each(self):
        timeline = build_erp_schedule(erp_spec(trial_count=2))
        assert sorted(e.class_id for e in timeline.events) == [0, 1]

    def test_seed_determinism(self):
        a = build_erp_schedule(erp_spec(seed=9, trial_count=30))
        b = build_erp_schedule(erp_spec(seed=9, trial_count=30))
        assert a == b

    def test_event_timing_grid(self):
        timeline = build_erp_schedule(erp_spec())
        for k, e in enumerate(timeline.events):
            assert e.t_on == pytest.approx(2.0 + k * 1.5)
            assert e.t_off == pytest.approx(e.t_on + 1.0)

    def test_duration_identity(self):
        # last t_off + buffer equals the closed-form duration
        for seed in range(5):
            spec = erp_spec(n_classes=3, weights=(0.1, 0.1, 0.8),
                            trial_count=40, seed=seed)
            tl = build_erp_schedule(spec)
            assert tl.events[-1].t_off + spec.buffer_time_s == pytest.approx(
                schedule_duration(spec), abs=1e-9)

    def test_rare_classes_not_adjacent(self):
        for seed in range(20):
            spec = erp_spec(n_classes=3, weights=(0.1, 0.1, 0.8),
                            trial_count=30, seed=seed)
            seq = [e.class_id for e in build_erp_schedule(spec).events]
            rare_repeats = sum(
                1 for i in range(1, len(seq))
                if seq[i] == seq[i - 1] and seq[i] in (0, 1))
            assert rare_repeats == 0

    def test_counts_within_one_of_quota(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(2, 5))
            w = rng.dirichlet(np.ones(n))
            w = tuple(w / w.sum())
            trials = int(rng.integers(1, 200))
            counts = apportion_counts(w, trials)
            assert sum(counts) == trials
            for c, wi in zip(counts, w):
                assert abs(c - wi * trials) < 1.0


class TestSsvepSchedule:
    def test_toggle_count_10hz_1s(self):
        tl = build_ssvep_schedule(SsvepScheduleSpec((("a", 10.0),), 1.0))
        assert len(tl.events) == 20
        times = [e.t_on for e in tl.events]
        np.testing.assert_allclose(np.diff(times), 0.05)

    def test_two_stimuli_independent(self):
        tl = build_ssvep_schedule(SsvepScheduleSpec((("a", 10.0), ("b", 15.0)), 1.0))
        a = [e for e in tl.events if e.label.startswith("a")]
        b = [e for e in tl.events if e.label.startswith("b")]
        assert len(a) == 20 and len(b) == 30

    def test_count_matches_enumeration(self):
        # brute-force oracle: count k with k/(2f) < duration
        for freq, dur in [(7.3, 2.0), (12.0, 1.7), (5.0, 3.01)]:
            tl = build_ssvep_schedule(SsvepScheduleSpec((("s", freq),), dur))
            expected = sum(1 for k in range(100000) if k / (2 * freq) < dur
                           and k < np.floor(2 * freq * dur))
            assert len(tl.events) == int(np.floor(2 * freq * dur)) == expected

    def test_duplicate_frequencies_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            SsvepScheduleSpec((("a", 10.0), ("b", 10.0)), 1.0)


class TestCalibration:
    def test_beep_times(self):
        tl = build_calibration_schedule(3, 3.0)
        assert [e.t_on for e in tl.events] == [0.0, 3.0, 6.0]
        assert all(e.label == "beep" and e.class_id is None for e in tl.events)

    def test_single_beep(self):
        tl = build_calibration_schedule(1, 2.0)
        assert len(tl.events) == 1 and tl.events[0].t_on == 0.0

    def test_duration(self):
        assert build_calibration_schedule(5, 2.0).total_duration_s == 8.0


def test_timeline_markers_export(tmp_path):
    from noetic.recording import read_markers_jsonl, write_markers_jsonl
    tl = build_erp_schedule(erp_spec())
    path = tmp_path / "m.jsonl"
    write_markers_jsonl(tl.markers(), path)
    back = read_markers_jsonl(path)
    assert back == sorted(tl.markers(), key=lambda m: m.t)
