"""Time the numba kernels against their pure-numpy twins.

    python benchmarks/bench_kernels.py                 # kernel timings
    python benchmarks/bench_kernels.py --end-to-end    # also a CLI sweep under each setting

Both variants are called directly, so one process measures both. The
end-to-end mode runs ``fredanon sweep`` in subprocesses with and without
FREDANON_DISABLE_NUMBA=1, which is how the switch is used in practice.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import tempfile
import time
import timeit
from pathlib import Path

import numpy as np

from fredanon import _accel, kernels, synthetic


def best_of(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_mdav(repeat: int) -> list[tuple[str, float, float]]:
    rng = np.random.default_rng(0)
    rows = []
    for m, c, k in ((200, 3, 5), (2000, 4, 5), (5000, 8, 10)):
        X = rng.uniform(size=(m, c))
        assert np.array_equal(kernels.mdav_labels_numba(X, k), kernels.mdav_labels_numpy(X, k))
        rows.append((f"mdav m={m} c={c} k={k}",
                     best_of(lambda: kernels.mdav_labels_numpy(X, k), repeat),
                     best_of(lambda: kernels.mdav_labels_numba(X, k), repeat)))
    return rows


def bench_centroid(repeat: int) -> list[tuple[str, float, float]]:
    fis = synthetic.fis()
    params = np.ascontiguousarray(fis._out_params)
    rng = np.random.default_rng(1)
    rows = []
    for n_calls in (200, 2000):
        W = rng.uniform(0, 1, size=(n_calls, params.shape[0])) * (rng.random((n_calls, params.shape[0])) < 0.2)
        W[:, 0] = 0.5  # keep the area non-zero

        def run(f):
            return lambda: [f(params, w) for w in W]

        rows.append((f"centroid x{n_calls} (T={params.shape[0]})",
                     best_of(run(kernels.clipped_centroid_numpy), repeat),
                     best_of(run(kernels.clipped_centroid_numba), repeat)))
    return rows


def end_to_end(repeat: int) -> list[tuple[str, float, float]]:
    with tempfile.TemporaryDirectory() as tmp:
        paths = synthetic.write_benchmark(tmp)
        argv = [sys.executable, "-m", "fredanon.cli", "sweep", "--data", paths["data"], "--aux", paths["aux"],
                "--fis", paths["fis"], "--schema", paths["schema"], "--kmin", "2", "--kmax", "15",
                "--out", Path(tmp) / "out"]
        timings = {}
        for label, flag in (("numpy", "1"), ("numba", "0")):
            env = {**os.environ, "FREDANON_DISABLE_NUMBA": flag}
            subprocess.run(argv, env=env, check=True, capture_output=True)  # warm the on-disk cache
            times = []
            for _ in range(repeat):
                t0 = time.perf_counter()
                subprocess.run(argv, env=env, check=True, capture_output=True)
                times.append(time.perf_counter() - t0)
            timings[label] = min(times)
    return [("cli sweep k=2..15 (process)", timings["numpy"], timings["numba"])]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)
    if not _accel.USE_NUMBA:
        print("numba is disabled or missing; only the numpy path would be timed", file=sys.stderr)
        return 1
    # compile outside the timed region
    kernels.mdav_labels_numba(np.random.default_rng(0).uniform(size=(10, 2)), 2)
    kernels.clipped_centroid_numba(np.array([[0.0, 1.0, 1.0, 2.0]]), np.array([1.0]))

    rows = bench_mdav(args.repeat) + bench_centroid(args.repeat)
    if args.end_to_end:
        rows += end_to_end(max(1, args.repeat // 2))
    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'numpy s':>10}  {'numba s':>10}  {'speedup':>8}")
    for name, t_np, t_nb in rows:
        print(f"{name:<{width}}  {t_np:>10.4f}  {t_nb:>10.4f}  {t_np / t_nb:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
