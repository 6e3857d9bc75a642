"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line and enforcing its runtime budget."""

import json
import math
import time

import numpy as np
import pytest

RESULTS = []


def record(name, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}  {name}  {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module", autouse=True)
def summary_banner():
    yield
    print("\n==== acceptance summary ====")
    for line in RESULTS:
        print(line)


class Budget:
    def __init__(self, seconds):
        self.limit = seconds
        self.t0 = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.t0

    def check(self):
        assert self.elapsed < self.limit, f"budget exceeded: {self.elapsed:.1f}s"


def test_p1_schedule_duration_exactness():
    budget = Budget(1.0)
    from noetic.stim import ErpScheduleSpec, build_erp_schedule, schedule_duration
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n_classes = int(rng.integers(2, 5))
        w = rng.dirichlet(np.ones(n_classes))
        w = tuple(w / w.sum())
        spec = ErpScheduleSpec(
            cue_time_s=float(rng.uniform(0.05, 3.0)),
            buffer_time_s=float(rng.uniform(0.0, 2.0)),
            fixation_time_s=float(rng.uniform(0.0, 10.0)),
            n_classes=n_classes, trial_count=int(rng.integers(1, 50)),
            weights=w, seed=int(rng.integers(0, 2**31)))
        closed_form = (spec.cue_time_s + spec.buffer_time_s) * spec.trial_count \
            + spec.fixation_time_s
        assert schedule_duration(spec) == closed_form  # bit-exact
        timeline = build_erp_schedule(spec)
        extent = timeline.events[-1].t_off + spec.buffer_time_s
        assert abs(extent - closed_form) < 1e-9
    budget.check()
    record("P1 schedule-duration exactness", True, f"{budget.elapsed:.2f}s")


def test_p2_butterworth_analytic_match():
    budget = Budget(5.0)
    from noetic.filters import FilterSpec, design_butterworth
    fs, fc = 256.0, 30.0
    worst = 0.0
    for order in range(2, 9):
        spec = design_butterworth("lowpass", fs, order=order, cutoffs=[fc])
        freqs = np.linspace(0.01 * fs, 0.45 * fs, 400)
        got_db = 20 * np.log10(spec.magnitude(freqs))
        w = 2 * fs * np.tan(np.pi * freqs / fs)
        wc = 2 * fs * np.tan(np.pi * fc / fs)
        want_db = -10 * np.log10(1.0 + (w / wc) ** (2 * order))
        worst = max(worst, np.abs(got_db - want_db).max())
        assert np.abs(FilterSpec.poles(spec.sos)).max() < 1.0
    assert worst < 0.05
    budget.check()
    record("P2 Butterworth analytic match", True,
           f"worst {worst:.2e} dB, {budget.elapsed:.2f}s")


def test_p3_channel_selection_recovery():
    budget = Budget(30.0)
    from noetic.channels import score_channels
    from noetic.core import ChannelInfo, EpochSet
    rng = np.random.default_rng(42)
    n_epochs, n_ch, length, hot = 400, 8, 64, 3
    labels = np.tile([0, 1], n_epochs // 2)
    data = rng.normal(size=(n_epochs, n_ch, length))
    data[labels == 1, hot, :] *= np.sqrt(2.0)  # planted 2:1 variance ratio
    chans = tuple(ChannelInfo(f"c{i}", i) for i in range(n_ch))
    epochs = EpochSet(data, tuple(labels), tuple(map(float, range(n_epochs))),
                      128.0, chans, 0.0, 0.5)
    for method in ("correlation", "mutual_information", "chi_squared", "csp"):
        scores = score_channels(epochs, method=method)
        assert int(np.argmax(scores.scores)) == hot, method
    permuted = rng.permutation(labels)
    mi = score_channels(EpochSet(data, tuple(permuted),
                                 tuple(map(float, range(n_epochs))), 128.0,
                                 chans, 0.0, 0.5),
                        method="mutual_information")
    assert mi.scores[hot] <= 0.05
    budget.check()
    record("P3 channel-selection recovery", True,
           f"control MI {mi.scores[hot]:.4f} bits, {budget.elapsed:.1f}s")


def test_p4_ica_separation():
    budget = Budget(60.0)
    from scipy.optimize import linear_sum_assignment
    from noetic.ica import ica_clean, ica_fit
    corrs = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        sources = rng.laplace(size=(4, 20000))
        mixing = rng.normal(size=(4, 4))
        mixed = mixing @ sources
        model = ica_fit(mixed, seed=seed)
        recovered = model.sources(mixed)
        c = np.abs(np.corrcoef(recovered, sources)[:4, 4:])
        rows, cols = linear_sum_assignment(-c)
        corrs.append(c[rows, cols].mean())
        cleaned, rejected = ica_clean(mixed, model, frontal_channels=[])
        assert rejected == []
        assert np.sqrt(np.mean((cleaned - mixed) ** 2)) <= 1e-9
    mean_corr = float(np.mean(corrs))
    assert mean_corr >= 0.95
    budget.check()
    record("P4 ICA separation", True,
           f"mean |corr| {mean_corr:.3f}, {budget.elapsed:.1f}s")


def test_p5_regression_cleaning():
    budget = Budget(10.0)
    from noetic.core import ChannelInfo, SignalBlock
    from noetic.preprocess import fit_regression_cleaner, regression_clean
    rng = np.random.default_rng(3)

    def segment(n=20000):
        raw = np.convolve(rng.normal(size=n + 10), np.ones(10) / 10, "valid")[:n]
        eog = 2.0 * raw / raw.std()
        brain = rng.normal(size=(2, n))
        data = np.vstack([brain + 0.8 * eog, eog[None, :]])
        chans = (ChannelInfo("c0", 0), ChannelInfo("c1", 1),
                 ChannelInfo("eog", 2, "eog-reference"))
        return SignalBlock(data, 200.0, 0.0, chans), brain, eog

    calib, _, _ = segment()
    cleaner = fit_regression_cleaner(calib, [2])
    assert np.abs(cleaner.coefficients - 0.8).max() <= 0.02
    held, brain, eog = segment()
    cleaned = regression_clean(held, cleaner)
    worst_db = np.inf
    for ch in range(2):
        before = np.var(0.8 * eog)
        after = np.var(cleaned.samples[ch] - brain[ch])
        worst_db = min(worst_db, 10 * np.log10(before / after))
    assert worst_db >= 20.0
    budget.check()
    record("P5 regression cleaning", True,
           f"coef err {np.abs(cleaner.coefficients - 0.8).max():.4f}, "
           f"reduction {worst_db:.1f} dB, {budget.elapsed:.1f}s")


def test_p6_feature_oracles():
    budget = Budget(60.0)
    from noetic._rng import SplitMix64
    from noetic.features import dfa, fractal_dimension, welch_psd
    from noetic.features.wavelet import dwt
    from noetic.synth import pink_noise

    fd_line = fractal_dimension(np.linspace(0, 1, 4096), "higuchi")
    assert abs(fd_line - 1.0) <= 0.05
    fd_white = np.mean([
        fractal_dimension(np.random.default_rng(s).normal(size=4096), "higuchi")
        for s in range(5)])
    assert abs(fd_white - 2.0) <= 0.15

    alphas_white = [dfa(np.random.default_rng(s).normal(size=2**14))
                    for s in range(10)]
    assert abs(np.mean(alphas_white) - 0.5) <= 0.05
    alphas_pink = [dfa(pink_noise(2**14, SplitMix64(s))) for s in range(10)]
    assert abs(np.mean(alphas_pink) - 1.0) <= 0.1

    fs = 256.0
    for freq in (5.0, 10.0, 31.0):
        tone = np.sin(2 * np.pi * freq * np.arange(4096) / fs)
        sp = welch_psd(tone, fs)
        total = np.trapezoid(sp.power, sp.freqs)
        assert abs(total - 0.5) / 0.5 <= 0.05

    x = np.random.default_rng(1).normal(size=2048)
    coeffs = dwt(x, levels=5, mode="periodic")
    err = abs(sum(np.sum(c**2) for c in coeffs) - np.sum(x**2))
    assert err <= 1e-6
    budget.check()
    record("P6 feature oracles", True,
           f"alpha_w {np.mean(alphas_white):.3f}, alpha_p {np.mean(alphas_pink):.3f}, "
           f"dwt err {err:.1e}, {budget.elapsed:.1f}s")


def test_p7_riemannian_suite():
    budget = Budget(30.0)
    from noetic import riemann
    from noetic.classify import predict, train
    rng = np.random.default_rng(7)

    def spd(scale=1.0, n=4):
        a = rng.normal(size=(n, n))
        return scale * (a @ a.T + n * np.eye(n))

    worst_sym, worst_tri = 0.0, 0.0
    for _ in range(200):
        a, b, c = spd(), spd(), spd()
        dab = riemann.airm_distance(a, b)
        worst_sym = max(worst_sym, abs(dab - riemann.airm_distance(b, a)))
        slack = riemann.airm_distance(a, c) + riemann.airm_distance(c, b) - dab
        worst_tri = min(worst_tri, slack) if worst_tri else slack
        assert slack > -1e-8
    assert worst_sym <= 1e-10

    mean = riemann.riemann_mean([np.eye(2), np.exp(2.0) * np.eye(2)])
    assert np.abs(mean - np.e * np.eye(2)).max() <= 1e-6

    covs = np.stack([spd(1.0) for _ in range(8)] + [spd(6.0) for _ in range(8)])
    labels = np.array([0] * 8 + [1] * 8)
    tests = [spd(float(s)) for s in (1.0, 2.0, 4.0, 6.0)]
    model = train("rmdm", covs, labels)
    base = [predict(model, t)[0] for t in tests]
    for _ in range(50):
        g = rng.normal(size=(4, 4))
        model_g = train("rmdm", np.stack([g @ c @ g.T for c in covs]), labels)
        got = [predict(model_g, g @ t @ g.T)[0] for t in tests]
        assert got == base
    budget.check()
    record("P7 Riemannian suite", True,
           f"sym {worst_sym:.1e}, {budget.elapsed:.1f}s")


# ---- shared end-to-end fixtures for P8/P9 ----------------------------------

@pytest.fixture(scope="module")
def ssvep_setup(tmp_path_factory):
    """Two-class 10 vs 15 Hz recording at ~0 dB in-band SNR, 60 epochs/class."""
    from noetic.recording import read_recording, write_recording
    from noetic.synth import SsvepComponent, SynthSpec, synth_recording
    tmp = tmp_path_factory.mktemp("ssvep")
    fs, epoch_s, per_class = 128.0, 2.0, 60
    duration = 2 * per_class * epoch_s
    # measure noise power, then set tone amplitude for 0 dB SNR
    noise_spec = SynthSpec(10.0, fs, 8, pink_gain=1.0, white_gain=0.5, seed=99)
    noise, _ = synth_recording(noise_spec)
    amp = float(np.sqrt(2.0 * noise.samples.var()))
    sched10 = tuple((2 * epoch_s * k, 2 * epoch_s * k + epoch_s)
                    for k in range(per_class))
    sched15 = tuple((2 * epoch_s * k + epoch_s, 2 * epoch_s * (k + 1))
                    for k in range(per_class))
    spec = SynthSpec(duration, fs, 8, pink_gain=1.0, white_gain=0.5,
                     ssvep=(SsvepComponent(10.0, (0, 1), amp, sched10),
                            SsvepComponent(15.0, (2, 3), amp, sched15)),
                     seed=2025)
    rec, markers = synth_recording(spec)
    path = tmp / "ssvep.neeg"
    write_recording(rec, markers, path)
    rec, markers = read_recording(path)
    return {"rec": rec, "markers": markers, "path": str(path), "tmp": tmp,
            "fs": fs, "epoch_s": epoch_s}


def _p8_graph_text(path, model_path=None, indices=(0, 1, 2, 3)):
    nodes = [
        {"id": "src", "kind": "source.replay", "params": {"path": path}},
        {"id": "sel", "kind": "select.channels", "params": {"indices": list(indices)}},
        {"id": "bp", "kind": "filt.butter",
         "params": {"kind": "bandpass", "order": 4, "cutoffs": [1.0, 40.0]}},
        {"id": "ep", "kind": "epoch.markers", "params": {"pre_s": 0.25, "post_s": 1.75}},
        {"id": "feat", "kind": "feature.bandpower"},
    ]
    edges = [{"from": "src", "to": "sel"}, {"from": "sel", "to": "bp"},
             {"from": "bp", "to": "ep"}, {"from": "ep", "to": "feat"}]
    if model_path:
        nodes += [{"id": "clf", "kind": "classify.nb", "params": {"model_path": model_path}},
                  {"id": "out", "kind": "sink.decision"}]
        edges += [{"from": "feat", "to": "clf"}, {"from": "clf", "to": "out"}]
    else:
        nodes += [{"id": "out", "kind": "sink.features",
                   "params": {"path": path + ".csv"}}]
        edges += [{"from": "feat", "to": "out"}]
    return json.dumps({"version": 1, "seed": 0, "nodes": nodes, "edges": edges})


def test_p8_end_to_end_ssvep(ssvep_setup):
    budget = Budget(120.0)
    from noetic.channels import score_channels, select_top_n
    from noetic.core import epoch_by_markers
    from noetic.evaluate import cross_validate
    from noetic.flow import parse_pipeline, run_offline, validate_graph
    from noetic.riemann import epoch_covariance

    rec, markers = ssvep_setup["rec"], ssvep_setup["markers"]
    raw_epochs, _ = epoch_by_markers(rec, markers, 0.25, 1.75)
    scores = score_channels(raw_epochs, method="correlation")
    chosen = sorted(select_top_n(scores, 4))
    assert set(chosen) == {0, 1, 2, 3}, f"selection missed tone channels: {chosen}"

    graph = validate_graph(parse_pipeline(
        _p8_graph_text(ssvep_setup["path"], indices=chosen)))
    result = run_offline(graph)
    fv = result.values[("feat", "out")]
    labels = np.array(fv.class_ids, dtype=int)
    assert labels.size == 120

    cv = cross_validate("nb", fv.values, labels, k=5, seed=0)
    assert cv.mean_accuracy >= 0.90, f"NB accuracy {cv.mean_accuracy:.3f}"
    assert cv.mean_mcc >= 0.80, f"NB MCC {cv.mean_mcc:.3f}"

    filtered_epochs = result.values[("ep", "out")]
    covs = np.stack([epoch_covariance(e) for e in filtered_epochs.data])
    cv_r = cross_validate("rmdm", covs, labels, k=5, seed=0)
    assert cv_r.mean_accuracy >= 0.90, f"RMDM accuracy {cv_r.mean_accuracy:.3f}"
    budget.check()
    record("P8 end-to-end synthetic SSVEP", True,
           f"NB acc {cv.mean_accuracy:.3f} mcc {cv.mean_mcc:.3f}, "
           f"RMDM acc {cv_r.mean_accuracy:.3f}, {budget.elapsed:.1f}s")


def test_p9_offline_online_equivalence(ssvep_setup):
    budget = Budget(120.0)
    from noetic.classify import serialize_model, train
    from noetic.flow import (parse_pipeline, run_offline, start_online,
                             validate_graph)
    from noetic.wire import replay_frames

    feats_graph = validate_graph(parse_pipeline(_p8_graph_text(ssvep_setup["path"])))
    result = run_offline(feats_graph)
    fv = result.values[("feat", "out")]
    model = train("nb", fv.values, np.array(fv.class_ids, dtype=int))
    model_path = str(ssvep_setup["tmp"] / "nb.json")
    with open(model_path, "w") as f:
        f.write(serialize_model(model))

    graph = validate_graph(parse_pipeline(
        _p8_graph_text(ssvep_setup["path"], model_path=model_path)))
    offline = run_offline(graph).outputs["out"]
    rec, markers = ssvep_setup["rec"], ssvep_setup["markers"]
    session = start_online(graph, replay_frames(rec, markers, 32))
    online = tuple(session.sink_state("out").decisions)
    summary = session.stop()
    assert offline == online  # bit-exact decisions incl. scores
    assert summary["frames_in"] == summary["frames_consumed"]
    assert len(offline) == 120
    budget.check()
    record("P9 offline/online equivalence", True,
           f"{len(offline)} decisions bit-equal, {budget.elapsed:.1f}s")


def test_p10_realtime_budget(tmp_path):
    budget = Budget(120.0)
    from noetic.core import Marker
    from noetic.flow import parse_pipeline, start_online, validate_graph
    from noetic.recording import write_recording
    from noetic.synth import SynthSpec, synth_recording
    from noetic.wire import replay_frames

    fs, duration, chunk = 512.0, 60.0, 64
    rec, _ = synth_recording(SynthSpec(duration, fs, 16, pink_gain=1.0,
                                       white_gain=0.5, seed=4))
    markers = [Marker(0.25 + 0.5 * k, "tick", 0) for k in range(int(duration * 2) - 2)]
    path = tmp_path / "rt.neeg"
    write_recording(rec, markers, path)

    doc = json.dumps({"version": 1, "seed": 0, "nodes": [
        {"id": "src", "kind": "source.replay", "params": {"path": str(path)}},
        {"id": "f", "kind": "filt.butter",
         "params": {"kind": "bandpass", "order": 4, "cutoffs": [1.0, 40.0]}},
        {"id": "ep", "kind": "epoch.markers", "params": {"pre_s": -0.25, "post_s": 0.25}},
        {"id": "car", "kind": "ref.car"},
        {"id": "feat", "kind": "feature.bandpower"},
        {"id": "sink", "kind": "sink.features",
         "params": {"path": str(tmp_path / "rt.csv")}}],
        "edges": [
            {"from": "src", "to": "f"}, {"from": "f", "to": "ep"},
            {"from": "ep", "to": "car"}, {"from": "car", "to": "feat"},
            {"from": "feat", "to": "sink"}]})
    graph = validate_graph(parse_pipeline(doc))
    t0 = time.perf_counter()
    session = start_online(graph, replay_frames(rec, markers, chunk))
    wall = time.perf_counter() - t0
    summary = session.stop()
    frame_duration_ms = chunk / fs * 1000.0
    assert summary["frame_p95_ms"] < frame_duration_ms, summary["frame_p95_ms"]
    assert wall < 60.0
    assert summary["frames_in"] == summary["frames_consumed"] == int(duration * fs / chunk)
    budget.check()
    record("P10 real-time budget", True,
           f"p95 {summary['frame_p95_ms']:.2f} ms < {frame_duration_ms:.0f} ms, "
           f"wall {wall:.1f}s for {duration:.0f}s of data")


def test_p11_format_round_trips(tmp_path):
    budget = Budget(60.0)
    from noetic.classify import deserialize_model, serialize_model, train
    from noetic.core import ChannelInfo, Marker, SignalBlock
    from noetic.flow import parse_pipeline, save_pipeline
    from noetic.recording import read_recording, write_recording
    from noetic import wire
    rng = np.random.default_rng(11)

    path = tmp_path / "fuzz.neeg"
    for i in range(1000):
        n_ch = int(rng.integers(1, 5))
        n_s = int(rng.integers(1, 40))
        data = (rng.normal(size=(n_ch, n_s)) * 100).astype("<f4").astype(np.float64)
        chans = tuple(ChannelInfo(f"c{j}", j) for j in range(n_ch))
        rec = SignalBlock(data, float(rng.uniform(1, 1000)),
                          float(rng.uniform(-10, 10)), chans)
        markers = [Marker(float(rng.uniform(0, 10)), f"m{k}",
                          int(rng.integers(0, 5)) if rng.uniform() < 0.5 else None)
                   for k in range(int(rng.integers(0, 4)))]
        write_recording(rec, markers, path)
        rec2, markers2 = read_recording(path)
        assert np.array_equal(rec.samples, rec2.samples)
        assert markers2 == sorted(markers, key=lambda m: m.t)

    for i in range(1000):
        choice = i % 4
        if choice == 0:
            f = wire.end_frame()
        elif choice == 1:
            f = wire.marker_frame(Marker(float(rng.uniform(-5, 5)), "x" * int(rng.integers(0, 9)),
                                         int(rng.integers(0, 3)) if rng.uniform() < 0.5 else None))
        elif choice == 2:
            f = wire.data_frame(float(rng.uniform()), rng.normal(
                size=(int(rng.integers(1, 5)), int(rng.integers(1, 20)))).astype("<f4"))
        else:
            chans = tuple(ChannelInfo(f"c{j}", j) for j in range(int(rng.integers(1, 4))))
            from noetic.recording import RecordingHeader
            f = wire.header_frame(RecordingHeader(float(rng.uniform(1, 512)), chans))
        assert wire.decode_frame(wire.encode_frame(f)) == f

    kinds = ("filt.butter", "ref.car", "window.kaiser")
    for i in range(1000):
        nodes = []
        for j in range(int(rng.integers(0, 4))):
            kind = kinds[int(rng.integers(0, 3))]
            params = {"cutoffs": [float(rng.uniform(0.1, 10))]} \
                if kind == "filt.butter" else {}
            nodes.append({"id": f"n{j}", "kind": kind, "params": params})
        doc_text = json.dumps({"version": 1, "seed": int(rng.integers(0, 100)),
                               "nodes": nodes, "edges": []})
        doc = parse_pipeline(doc_text)
        canonical = save_pipeline(doc)
        assert save_pipeline(parse_pipeline(canonical)) == canonical

    x = rng.normal(size=(30, 4))
    y = np.array([0, 1, 2] * 10)
    for i in range(1000):
        model = train("nb", x + rng.normal(size=(30, 4)), y)
        clone = deserialize_model(serialize_model(model))
        for k in model.params:
            assert np.array_equal(model.params[k], clone.params[k])
    budget.check()
    record("P11 format/protocol round trips", True,
           f"4x1000 cases, {budget.elapsed:.1f}s")


def test_p12_simulator_determinism():
    budget = Budget(10.0)
    from noetic.sim import SimConfig, SimSession, replay_trace, score
    rng = np.random.default_rng(9)
    config = SimConfig(10, 2.0, 1.0, seed=5)
    session = SimSession(config)
    t = 0.0
    while t < 21.0:
        t += float(rng.uniform(0.05, 0.5))
        session.step(t, int(rng.integers(0, 2)) if rng.uniform() < 0.5 else None)
    session.finish()
    twin = replay_trace(config, session.trace)
    assert [r.outcome for r in twin.records()] == \
        [r.outcome for r in session.records()]

    alternating = SimSession(SimConfig(10, 2.0, 1.0, classes=(0, 1) * 5))
    for k, rec in enumerate(alternating.records()):
        guess = rec.class_id if k % 2 == 0 else 1 - rec.class_id
        alternating.step(rec.announce_t + 0.5, guess)
    alternating.finish()
    assert score(alternating)["accuracy"] == 0.5
    budget.check()
    record("P12 simulator determinism", True, f"{budget.elapsed:.1f}s")
