"""Benchmark the compiled kernel core against the NumPy/SciPy fallback.

Run: python benchmarks/bench_kernels.py [--repeats N]

Workloads mirror the engine's hot paths: streaming SOS filtering of a
16-channel 512 Hz stream in 64-sample chunks, and the loop-bound feature
kernels on one 2-second epoch.
"""

import argparse
import time

import numpy as np
from scipy import signal as scipy_signal

from noetic import _kernels_py as kpy

try:
    from noetic import _kernels_c as kc
except ImportError:
    kc = None


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    rng = np.random.default_rng(0)
    sos = np.ascontiguousarray(
        scipy_signal.butter(4, [1.0, 40.0], btype="bandpass", fs=512.0, output="sos"))
    stream = np.ascontiguousarray(rng.normal(size=(16, 512 * 10)))
    epoch = np.ascontiguousarray(rng.normal(size=1024))
    profile = np.ascontiguousarray(np.cumsum(epoch - epoch.mean()))
    scales = [4, 7, 12, 21, 37, 64, 112, 196, 256]

    def sosfilt_chunks(mod):
        zi = np.zeros((sos.shape[0], 16, 2))
        for i in range(0, stream.shape[1], 64):
            mod.sosfilt(sos, np.ascontiguousarray(stream[:, i:i + 64]), zi)

    return [
        ("sosfilt 16ch x 10s/64", lambda m: sosfilt_chunks(m)),
        ("sample entropy n=1024", lambda m: m.sampen_counts(epoch, 2, 0.2)),
        ("apen phi m=2 n=1024", lambda m: m.apen_phi(epoch, 2, 0.2)),
        ("higuchi k<=8 n=1024", lambda m: m.higuchi_lengths(epoch, 8)),
        ("dfa 9 scales n=1024", lambda m: m.dfa_fluctuations(profile, scales)),
    ]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rows = []
    for name, fn in workloads():
        t_py = timeit(lambda: fn(kpy), args.repeats)
        if kc is not None:
            t_c = timeit(lambda: fn(kc), args.repeats)
            rows.append((name, t_py, t_c, t_py / t_c))
        else:
            rows.append((name, t_py, None, None))

    header = f"{'workload':28s} {'fallback':>12s} {'compiled':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, t_py, t_c, ratio in rows:
        if t_c is None:
            print(f"{name:28s} {t_py * 1e3:10.2f}ms {'(not built)':>12s}")
        else:
            print(f"{name:28s} {t_py * 1e3:10.2f}ms {t_c * 1e3:10.2f}ms {ratio:8.1f}x")
    if kc is None:
        print("\ncompiled extension not available; showing fallback only")


if __name__ == "__main__":
    main()
