"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--steps 200000] [--repeat 3]

Times one closed-loop simulation (reference parameter set, 5 ns steps) and one
principal-value transform with each backend, and checks that both give the
same numbers.
"""
import argparse
import math
import time

import numpy as np

from holelock import kernels, loop
from holelock.analysis import principal_value
from holelock.atomic import OpticalParams, ThreeLevelRFEraser
from holelock.pdh import LockSystem


def best_of(fn, repeat):
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def with_backend(impl, fn):
    saved = kernels.closed_loop, kernels.pv_integral
    kernels.closed_loop, kernels.pv_integral = impl.closed_loop, impl.pv_integral
    try:
        return fn()
    finally:
        kernels.closed_loop, kernels.pv_integral = saved


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000, help="closed-loop time steps")
    ap.add_argument("--grid", type=int, default=4001, help="samples in the principal-value grid")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if not kernels.COMPILED_AVAILABLE:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    opt = OpticalParams(T1=150e-6, T2_0=18e-6, alpha0L=1.0)
    lv = ThreeLevelRFEraser(T_rg=4e-3, b_er=0.5, b_eg=0.5)
    plant = loop.LoopPlant.from_system(LockSystem.with_rabi(opt, lv, 2 * math.pi * 1e3, P_in=0.23e-3), 0.4)
    cfg = loop.ElectronicsConfig().matched(plant.trio, plant.T_rg)
    dt = 5e-9
    sim = lambda: loop.run_closed_loop(plant, cfg, loop.LaserNoiseModel(seed=1), dt, args.steps * dt)

    w = np.sinh(np.linspace(-6, 6, args.grid))
    f = 1.0 / (1.0 + w**2)
    pv = lambda: principal_value(w, f)

    rows = []
    for name, fn, compare in (("closed loop", sim, lambda a, b: np.max(np.abs(a.freq - b.freq))),
                              ("principal value", pv, lambda a, b: np.max(np.abs(a - b)))):
        tc, rc = with_backend(kernels.compiled_impl, lambda: best_of(fn, args.repeat))
        tp, rp = with_backend(kernels.python_impl, lambda: best_of(fn, args.repeat))
        rows.append((name, tc, tp, compare(rc, rp)))

    print(f"{'kernel':<16} {'compiled [s]':>13} {'python [s]':>11} {'speed-up':>9} {'max diff':>10}")
    for name, tc, tp, diff in rows:
        print(f"{name:<16} {tc:13.4f} {tp:11.4f} {tp / tc:9.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
