"""Command line interface.

Exit codes: 0 success, 1 user error (bad flags, missing files, invalid
documents), 2 internal error. Output files are written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        raise UserError(message)


class UserError(Exception):
    pass


def _atomic_write(path: str, text: str):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise UserError(f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise UserError(f"{path} is not valid JSON: {e}")


def _default_synth_spec(args) -> dict:
    # two-second alternating on-intervals, so a [0.25, 1.75) epoch window
    # sits entirely inside one class's tone
    quarters = int(args.duration / 4.0)
    return {
        "duration_s": args.duration, "fs": args.fs, "n_channels": args.channels,
        "pink_gain": 1.0, "white_gain": 0.5,
        "ssvep": [
            {"freq_hz": 10.0, "channels": [0, 1], "amplitude_uv": 4.0,
             "schedule": [[4 * k, 4 * k + 2] for k in range(quarters)]},
            {"freq_hz": 15.0, "channels": [args.channels - 2, args.channels - 1],
             "amplitude_uv": 4.0,
             "schedule": [[4 * k + 2, 4 * k + 4] for k in range(quarters)]},
        ],
    }


def cmd_synth(args) -> int:
    from ..flow.nodes import _synth_spec_from_params
    from ..recording import write_recording
    from ..synth import synth_recording
    spec_dict = _load_json(args.spec) if args.spec else _default_synth_spec(args)
    spec_dict.setdefault("seed", args.seed)
    try:
        rec, markers = synth_recording(_synth_spec_from_params({"spec": spec_dict},
                                                               args.seed))
    except (KeyError, TypeError, ValueError) as e:
        raise UserError(f"bad synth spec: {e}")
    write_recording(rec, markers, args.out)
    print(json.dumps({"out": args.out, "n_channels": rec.n_channels,
                      "fs": rec.fs, "duration_s": rec.duration_s,
                      "markers": len(markers)}))
    return 0


def _read_recording(path):
    from ..recording import read_recording
    if not os.path.exists(path):
        raise UserError(f"no such input file: {path}")
    try:
        return read_recording(path)
    except ValueError as e:
        raise UserError(f"{path}: {e}")


def cmd_run(args) -> int:
    from ..flow.doc import PipelineError, parse_pipeline
    from ..flow.engine import run_offline
    from ..flow.graph import validate_graph
    if not os.path.exists(args.pipeline):
        raise UserError(f"no such pipeline document: {args.pipeline}")
    with open(args.pipeline, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        graph = validate_graph(parse_pipeline(text, source=args.pipeline))
    except PipelineError as e:
        raise UserError(str(e))
    rec = markers = None
    if args.input:
        rec, markers = _read_recording(args.input)
    result = run_offline(graph, rec, markers, seed=args.seed)
    summary = {"sinks": {}, "meta": result.meta}
    for node_id, value in result.outputs.items():
        summary["sinks"][node_id] = _summarize_sink(value)
    text = json.dumps(summary, indent=2, sort_keys=True, default=str)
    if args.out:
        _atomic_write(args.out, text + "\n")
    print(text)
    return 0


def _summarize_sink(value):
    from ..flow.nodes import PlotFrame
    if isinstance(value, str):
        return {"file": value}
    if isinstance(value, tuple):
        if value and isinstance(value[0], PlotFrame):
            return {"plot_frames": len(value)}
        if value and hasattr(value[0], "class_id"):
            return {"decisions": [getattr(d, "class_id", d) for d in value]}
        if value and hasattr(value[0], "to_dict"):
            return {"records": [r.to_dict() for r in value]}
        return {"items": len(value)}
    return {"type": type(value).__name__}


def _epochs_from_args(args):
    from ..core import epoch_by_markers
    rec, markers = _read_recording(args.input)
    labeled = [m for m in markers if m.class_id is not None]
    if not labeled:
        raise UserError("recording has no class-labeled markers to epoch on")
    epochs, _ = epoch_by_markers(rec, labeled, args.pre, args.post)
    if epochs.n_epochs == 0:
        raise UserError("no epochs fit inside the recording")
    return epochs


def cmd_select(args) -> int:
    from ..channels import score_channels, select_top_n
    epochs = _epochs_from_args(args)
    try:
        scores = score_channels(epochs, method=args.method)
        chosen = select_top_n(scores, args.n)
    except ValueError as e:
        raise UserError(str(e))
    report = scores.to_report(chosen)
    if args.out:
        _atomic_write(args.out, report + "\n")
    print(report)
    return 0


def cmd_train(args) -> int:
    from ..classify import serialize_model, train
    from ..evaluate import cross_validate
    from ..flow.nodes import _feature_vector
    from ..riemann import epoch_covariance
    epochs = _epochs_from_args(args)
    labels = np.array([c if c is not None else -1 for c in epochs.class_ids])
    if args.kind == "nb":
        rows = [_feature_vector("train", {"bands": None, "relative": True},
                                epochs.data[i], epochs.fs, "bandpower")
                for i in range(epochs.n_epochs)]
        data = np.stack([r.values for r in rows])
    else:
        data = np.stack([epoch_covariance(e, args.shrinkage) for e in epochs.data])
    try:
        cv = cross_validate(args.kind, data, labels, k=args.folds, seed=args.seed)
        model = train(args.kind, data, labels)
    except ValueError as e:
        raise UserError(str(e))
    _atomic_write(args.out, serialize_model(model))
    print(json.dumps({
        "model": args.out, "kind": args.kind, "epochs": epochs.n_epochs,
        "cv_accuracy": cv.mean_accuracy, "cv_mcc": cv.mean_mcc,
        "folds": [{"accuracy": f.accuracy, "mcc": f.mcc} for f in cv.folds],
    }, indent=2, sort_keys=True))
    return 0


def cmd_sim(args) -> int:
    from ..sim import SimConfig, SimSession, score
    try:
        config = SimConfig(args.obstacles, args.interval, args.window,
                           seed=args.seed)
    except ValueError as e:
        raise UserError(str(e))
    session = SimSession(config)
    if args.decisions:
        trace = _load_json(args.decisions)
        for entry in trace:
            session.step(float(entry["t"]), entry.get("class_id"))
    else:
        rng = np.random.default_rng(args.seed)
        for rec in session.records():
            t = rec.announce_t + args.window / 2.0
            if args.policy == "perfect":
                session.step(t, rec.class_id)
            elif args.policy == "random":
                session.step(t, int(rng.integers(0, 2)))
            else:
                session.step(t, None)
    session.finish()
    result = score(session)
    if args.out:
        _atomic_write(args.out, session.to_jsonl())
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app
    app = create_app(args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_nodes(args) -> int:
    from .service import _catalog_listing
    listing = _catalog_listing()
    if args.json:
        print(json.dumps(listing, indent=2, sort_keys=True))
    else:
        for entry in listing:
            print(f"{entry['kind']:24s} {entry['doc']}")
    return 0


def cmd_filter_design(args) -> int:
    from ..filters import design_butterworth
    try:
        spec = design_butterworth(args.kind, args.fs, order=args.order,
                                  cutoffs=args.cutoff)
    except ValueError as e:
        raise UserError(str(e))
    out = json.loads(spec.to_json())
    if args.at:
        freqs = [float(f) for f in args.at.split(",")]
        mags = spec.magnitude(freqs)
        out["response"] = [
            {"freq_hz": f, "magnitude_db": float(20 * np.log10(max(m, 1e-300)))}
            for f, m in zip(freqs, mags)
        ]
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def build_parser() -> _Parser:
    p = _Parser(prog="noetic",
                description="Desk-scale EEG BCI pipeline engine")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="render a synthetic recording", parents=[])
    s.add_argument("--out", required=True)
    s.add_argument("--spec", help="JSON synth spec file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--duration", type=float, default=20.0)
    s.add_argument("--fs", type=float, default=256.0)
    s.add_argument("--channels", type=int, default=8)
    s.set_defaults(fn=cmd_synth)

    s = sub.add_parser("run", help="run a pipeline offline")
    s.add_argument("--pipeline", required=True)
    s.add_argument("--input", help="recording that overrides the source node")
    s.add_argument("--out", help="write the run summary JSON here")
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(fn=cmd_run)

    s = sub.add_parser("select", help="rank channels against the class label")
    s.add_argument("--input", required=True)
    s.add_argument("--method", default="correlation",
                   choices=("correlation", "mutual_information", "chi_squared", "csp"))
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--pre", type=float, default=0.0)
    s.add_argument("--post", type=float, default=1.0)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_select)

    s = sub.add_parser("train", help="train a classifier with cross-validation")
    s.add_argument("--input", required=True)
    s.add_argument("--kind", default="nb", choices=("nb", "rmdm", "tangent_linear"))
    s.add_argument("--pre", type=float, default=0.0)
    s.add_argument("--post", type=float, default=1.0)
    s.add_argument("--folds", type=int, default=5)
    s.add_argument("--shrinkage", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_train)

    s = sub.add_parser("sim", help="run the obstacle arena headlessly")
    s.add_argument("--obstacles", type=int, default=10)
    s.add_argument("--interval", type=float, default=2.0)
    s.add_argument("--window", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--decisions", help="JSON list of {t, class_id} to replay")
    s.add_argument("--policy", default="perfect",
                   choices=("perfect", "random", "timeout"))
    s.add_argument("--out", help="write the per-obstacle JSON-lines log here")
    s.set_defaults(fn=cmd_sim)

    s = sub.add_parser("serve", help="start the HTTP/WebSocket service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8890)
    s.add_argument("--data-dir", default=None)
    s.set_defaults(fn=cmd_serve)

    s = sub.add_parser("nodes", help="list the node catalog")
    s.add_argument("--json", action="store_true")
    s.set_defaults(fn=cmd_nodes)

    s = sub.add_parser("filter-design", help="design a Butterworth filter")
    s.add_argument("--kind", default="bandpass",
                   choices=("lowpass", "highpass", "bandpass", "bandstop"))
    s.add_argument("--order", type=int, default=4)
    s.add_argument("--cutoff", type=float, nargs="+", required=True)
    s.add_argument("--fs", type=float, required=True)
    s.add_argument("--at", help="comma-separated frequencies to report |H| at")
    s.set_defaults(fn=cmd_filter_design)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UserError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except Exception as e:  # internal error
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
