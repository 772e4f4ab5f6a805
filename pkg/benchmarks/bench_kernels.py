"""Compare the compiled and plain-numpy kernel paths.

Runs each backend in its own subprocess (the backend is fixed at import
time by OPTIROUTE_KERNELS) and prints a side-by-side table. JIT warmup
happens before any timed section.

    python benchmarks/bench_kernels.py [--rows 4096] [--repeats 200]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def run_worker(backend: str, rows: int, repeats: int) -> dict:
    import numpy as np

    from optiroute import _kernels

    rng = np.random.default_rng(42)
    matrix = rng.random((rows, 9))
    raw = rng.random((rows, 10)) * 100.0
    invert = np.zeros(10, dtype=np.bool_)
    invert[1] = True
    invert[2] = True
    query = rng.random(9)
    weights = rng.random(8)

    _kernels.warmup()

    timings = {}
    for name, fn in (
        ("cosine_scores", lambda: _kernels.cosine_scores(matrix, query)),
        ("minmax_normalize", lambda: _kernels.minmax_normalize(raw, invert)),
        ("weighted_scores", lambda: _kernels.weighted_scores(matrix, weights)),
    ):
        fn()  # one untimed call per kernel on the real shapes
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        timings[name] = (time.perf_counter() - t0) / repeats
    return {"backend": _kernels.backend_name(), "timings": timings}


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=4096)
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--worker", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        print(json.dumps(run_worker(args.worker, args.rows, args.repeats)))
        return 0

    results = {}
    for backend in ("numpy", "numba"):
        env = dict(os.environ, OPTIROUTE_KERNELS=backend)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__),
             "--worker", backend, "--rows", str(args.rows),
             "--repeats", str(args.repeats)],
            env=env, capture_output=True, text=True,
        )
        if proc.returncode != 0:
            print(f"{backend}: unavailable ({proc.stderr.strip().splitlines()[-1]})")
            continue
        results[backend] = json.loads(proc.stdout.strip().splitlines()[-1])

    if not results:
        return 1
    kernels = sorted(next(iter(results.values()))["timings"])
    print(f"rows={args.rows} repeats={args.repeats}  (seconds per call)")
    header = f"{'kernel':<18}" + "".join(f"{b:>14}" for b in results)
    if len(results) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for kernel in kernels:
        row = f"{kernel:<18}"
        vals = []
        for backend in results:
            t = results[backend]["timings"][kernel]
            vals.append(t)
            row += f"{t:>14.3e}"
        if len(vals) == 2 and vals[1] > 0:
            row += f"{vals[0] / vals[1]:>9.2f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
