"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--sizes 128 512 2048] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from squeeze_sim import kernels
from squeeze_sim.config import reference_config
from squeeze_sim.evolution import compute_constants, picard_solve


def _best(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def bench_kernel(backend, n, repeat):
    kernels.use_backend(backend)
    rng = np.random.default_rng(0)
    w = 1.0 + 0.2 * rng.random(n)
    rhs = rng.standard_normal(n)
    h = 1.0 / (n + 1)
    a = kernels.face_coefficients(w, 1.0, 1.0)
    v, ww = rng.standard_normal(n), rng.standard_normal(n)
    omega = np.sqrt(np.arange(1, n + 1, dtype=float) ** 4)
    return {
        "flux_solve": _best(lambda: kernels.flux_solve(a, rhs, h), 200, repeat),
        "face_coefficients": _best(lambda: kernels.face_coefficients(w, 1.0, 1.0), 200, repeat),
        "rotate": _best(lambda: kernels.rotate(v, ww, omega, 0.3), 200, repeat),
    }


def bench_picard(backend, repeat):
    kernels.use_backend(backend)
    cfg = reference_config(128)
    T = 0.5 * compute_constants(cfg).T0
    run = cfg.with_(horizon=T, dt=T / 200)
    return _best(lambda: picard_solve(run, T), 1, repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 512, 2048])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    start = kernels.BACKEND
    print(f"backends: {', '.join(backends)}")
    print(f"{'kernel':18s} {'n':>6s} " + " ".join(f"{b + ' [us]':>14s}" for b in backends) + "   speedup")
    for n in args.sizes:
        rows = {b: bench_kernel(b, n, args.repeat) for b in backends}
        for name in rows[backends[0]]:
            times = [rows[b][name] * 1e6 for b in backends]
            speed = f"{times[-1] / times[0]:8.1f}x" if len(times) > 1 else ""
            print(f"{name:18s} {n:6d} " + " ".join(f"{t:14.2f}" for t in times) + f"  {speed}")
    times = [bench_picard(b, max(1, args.repeat // 2)) for b in backends]
    speed = f"{times[-1] / times[0]:8.1f}x" if len(times) > 1 else ""
    print(f"{'picard n=128':18s} {'':6s} " + " ".join(f"{t * 1e6:14.0f}" for t in times) + f"  {speed}")
    kernels.use_backend(start)


if __name__ == "__main__":
    main()
