"""Compare the compiled and pure-Python RK4 backends on the satellite.

    python3 benchmarks/bench_kernels.py [--t-end 6.283] [--h 1e-3] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from magctl import kernels
from magctl.model import P_STAR, build_system
from magctl.simulate import ConstantLaw, equilibrium_float, integrate_rk4


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=2 * np.pi)
    ap.add_argument("--h", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    sys_ = build_system(P_STAR)
    x0 = equilibrium_float(sys_) + np.array([0.05, -0.03, 0.02, 0.1, -0.05, 0.08])
    law = ConstantLaw([0.1, -0.2, 0.05])
    steps = round(args.t_end / args.h)
    backends = ["python"] + (["cython"] if kernels.compiled_backend is not None else [])
    finals, times = {}, {}
    for name in backends:
        run = lambda: integrate_rk4(sys_, x0, law, t_end=args.t_end, h=args.h, backend=name)  # noqa: E731
        finals[name] = run().final
        times[name] = best_of(run, args.repeat)
        print(f"{name:7s} {times[name]:8.4f} s  {steps / times[name]:10.0f} steps/s")
    if len(backends) == 2:
        gap = float(np.max(np.abs(finals["python"] - finals["cython"])))
        print(f"speedup {times['python'] / times['cython']:.1f}x, final-state gap {gap:.1e}")
    else:
        print("compiled backend not built; only the fallback was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
