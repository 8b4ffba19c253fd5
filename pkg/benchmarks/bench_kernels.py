"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 20]

Each path runs in its own interpreter because ``BREPMAE_NUMBA`` is read at
import time. Timings exclude the first (compiling) call.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np


def cases():
    from brepmae import kernels

    rng = np.random.default_rng(0)
    deg = rng.integers(1, 8, size=2000)
    offsets = np.concatenate([[0], np.cumsum(deg)])
    values = rng.normal(size=(offsets[-1], 256))
    order = rng.permutation(offsets[-1])
    idx = rng.integers(0, 2000, size=20000)
    src = rng.normal(size=(20000, 64))
    ang = np.sort(rng.uniform(0, 2 * np.pi, 64))
    poly = np.stack([np.cos(ang), np.sin(ang)], 1)
    pts = rng.uniform(-1, 1, (4000, 2))
    wiggle = np.stack([np.linspace(0, 1, 200), rng.uniform(0, 0.01, 200)], 1)
    wiggle = np.concatenate([wiggle, [[1.0, 1.0], [0.0, 1.0]]])
    return {
        "segment_aggregate": lambda: kernels.segment_aggregate(values, order, offsets),
        "scatter_add_rows": lambda: kernels.scatter_add_rows(2000, idx, src),
        "points_in_loops": lambda: kernels.points_in_loops(pts, poly, np.roll(poly, -1, 0)),
        "loop_self_intersects": lambda: kernels.loop_self_intersects(wiggle),
    }


def worker(repeat):
    from brepmae._jit import USE_NUMBA

    result = {"numba": USE_NUMBA}
    for name, fn in cases().items():
        fn()  # warm-up, triggers compilation
        result[name] = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(json.dumps(result))


def run(flag, repeat):
    here = os.path.dirname(os.path.abspath(__file__))
    env = {**os.environ, "BREPMAE_NUMBA": flag}
    env["PYTHONPATH"] = os.pathsep.join([os.path.join(here, os.pardir, "src"), env.get("PYTHONPATH", "")])
    cmd = [sys.executable, __file__, "--worker", "--repeat", str(repeat)]
    return json.loads(subprocess.run(cmd, env=env, check=True, capture_output=True, text=True).stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.worker:
        worker(args.repeat)
        return
    fast, slow = run("1", args.repeat), run("0", args.repeat)
    if not fast.pop("numba"):
        print("numba is not importable; both columns use numpy")
    slow.pop("numba")
    print(f"{'kernel':<22}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for name in fast:
        a, b = fast[name] * 1e3, slow[name] * 1e3
        print(f"{name:<22}{a:>10.3f}{b:>10.3f}{b / a:>8.1f}x")


if __name__ == "__main__":
    main()
