import numpy as np
import pytest

from noetic.sim import SimConfig, SimSession, replay_trace, score


def config(n=5, interval=2.0, window=1.0, **kw):
    return SimConfig(n, interval, window, **kw)


class TestSession:
    def test_announce_schedule(self):
        session = SimSession(config())
        markers = session.announce_markers()
        assert [m.t for m in markers] == [0.0, 2.0, 4.0, 6.0, 8.0]

    def test_explicit_sequence_respected(self):
        session = SimSession(config(classes=(1, 0, 1, 1, 0)))
        assert tuple(r.class_id for r in session.records()) == (1, 0, 1, 1, 0)

    def test_seeded_sequence_deterministic(self):
        a = SimSession(config(seed=11)).records()
        b = SimSession(config(seed=11)).records()
        assert [r.class_id for r in a] == [r.class_id for r in b]

    def test_correct_decision_avoids(self):
        session = SimSession(config(classes=(1, 0, 1, 0, 1)))
        for rec in session.records():
            session.step(rec.announce_t + 0.5, rec.class_id)
        session.finish()
        assert all(r.outcome == "avoided" for r in session.records())

    def test_no_decision_times_out(self):
        session = SimSession(config(classes=(0,) * 5))
        session.finish()
        assert all(r.outcome == "timeout" for r in session.records())

    def test_second_decision_in_window_ignored(self):
        session = SimSession(config(classes=(1, 0, 1, 0, 1)))
        session.step(0.2, 1)   # binds, correct
        session.step(0.4, 0)   # ignored: first one wins
        session.finish()
        assert session.records()[0].outcome == "avoided"
        assert session.ignored_decisions == 1

    def test_decision_outside_window_ignored_and_counted(self):
        session = SimSession(config(classes=(1, 0, 1, 0, 1)))
        session.step(1.5, 1)  # window for obstacle 0 closed at 1.0
        session.finish()
        assert session.ignored_decisions == 1
        assert session.records()[0].outcome == "timeout"

    def test_outcomes_only_after_window_close(self):
        session = SimSession(config(classes=(1, 0, 1, 0, 1)))
        events = session.step(0.2, 1)
        assert not [e for e in events if e["type"] == "outcome"]
        events = session.step(1.1, None)
        assert [e for e in events if e["type"] == "outcome"]

    def test_time_must_be_monotone(self):
        session = SimSession(config())
        session.step(1.0, None)
        with pytest.raises(ValueError, match="nondecreasing"):
            session.step(0.5, None)

    def test_feedback_emitted_with_flags(self):
        session = SimSession(config(classes=(1, 0, 1, 0, 1)))
        session.step(0.1, 1)
        events = session.step(1.5, None)
        feedback = [e for e in events if e["type"] == "feedback"]
        assert feedback and feedback[0]["auditory"] and feedback[0]["visual"]


class TestScore:
    def test_all_avoided(self):
        session = SimSession(config(classes=(1, 0, 1, 0, 1)))
        for rec in session.records():
            session.step(rec.announce_t + 0.3, rec.class_id)
        session.finish()
        result = score(session)
        assert result["accuracy"] == 1.0 and result["avoided"] == 5
        assert not result["partial"]

    def test_alternating_half_accuracy(self):
        session = SimSession(config(n=10, classes=(0, 1) * 5))
        for k, rec in enumerate(session.records()):
            guess = rec.class_id if k % 2 == 0 else 1 - rec.class_id
            session.step(rec.announce_t + 0.3, guess)
        session.finish()
        result = score(session)
        assert result["accuracy"] == 0.5
        assert result["avoided"] == result["hit"] == 5

    def test_counts_sum_to_n(self):
        rng = np.random.default_rng(0)
        session = SimSession(config(n=12, classes=tuple(rng.integers(0, 2, 12))))
        for k, rec in enumerate(session.records()):
            if k % 3 == 0:
                continue  # let some time out
            session.step(rec.announce_t + 0.4, int(rng.integers(0, 2)))
        session.finish()
        result = score(session)
        assert result["avoided"] + result["hit"] + result["timeout"] == 12

    def test_partial_flag_before_finish(self):
        session = SimSession(config())
        session.step(0.1, None)
        assert score(session)["partial"]

    def test_itr_composite(self):
        session = SimSession(config(n=4, interval=3.0, classes=(0, 1, 0, 1)))
        for rec in session.records():
            session.step(rec.announce_t + 0.2, rec.class_id)
        session.finish()
        result = score(session)
        assert result["itr_bits_per_min"] == pytest.approx(20.0)  # 1 bit * 60/3


class TestReplay:
    def test_trace_reproduces_outcomes(self):
        rng = np.random.default_rng(5)
        session = SimSession(config(n=8, seed=3))
        t = 0.0
        for _ in range(30):
            t += float(rng.uniform(0.1, 0.6))
            decision = int(rng.integers(0, 2)) if rng.uniform() < 0.6 else None
            if t > 16.0:
                break
            session.step(t, decision)
        session.finish()
        twin = replay_trace(session.config, session.trace)
        assert [r.outcome for r in twin.records()] == \
            [r.outcome for r in session.records()]
        assert [r.decision for r in twin.records()] == \
            [r.decision for r in session.records()]

    def test_announce_markers_epoch_one_per_obstacle(self, rng):
        # sim markers feed the epocher: one epoch per obstacle
        from noetic.core import epoch_by_markers
        from conftest import make_block
        session = SimSession(config(n=5, interval=2.0))
        rec = make_block(rng.normal(size=(2, 1200)), fs=100.0)
        epochs, report = epoch_by_markers(rec, session.announce_markers(), 0.0, 1.0)
        assert epochs.n_epochs == 5 and not report.dropped


class TestConfig:
    def test_window_must_fit_interval(self):
        with pytest.raises(ValueError):
            SimConfig(3, 1.0, 1.5)

    def test_sequence_must_cover(self):
        with pytest.raises(ValueError):
            SimConfig(3, 2.0, 1.0, classes=(0, 1))

    def test_jsonl_log(self):
        session = SimSession(config(classes=(1, 0, 1, 0, 1)))
        session.finish()
        lines = session.to_jsonl().splitlines()
        assert len(lines) == 5
