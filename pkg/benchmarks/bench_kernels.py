#!/usr/bin/env python3
"""Benchmark the propagation hot kernels: numba backend vs numpy fallback.

The inner loop of every propagation step is one Hamiltonian application
(batched sine transform + five-channel coupling kernel) plus the
Chebyshev three-term update.  This script times those pieces and a full
pump step at production-like sizes for both backends.

Run:  python3 benchmarks/bench_kernels.py [n_points ...]
The active backend for the package itself follows HOTPA_NUMBA (1/0).
"""

import sys
import time

import numpy as np

from hotpa import curves, grid, hamiltonian, propagator
from hotpa.backend import get_kernels


def time_call(fn, *args, repeat=200):
    fn(*args)                      # warm up (JIT compile, cache load)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_kernels(n_points):
    rng = np.random.default_rng(0)
    amps = rng.standard_normal((5, n_points)) + 1j * rng.standard_normal((5, n_points))
    out = np.empty_like(amps)
    vd = np.ascontiguousarray(rng.standard_normal((5, n_points)))
    al = np.ascontiguousarray(rng.standard_normal((5, n_points)))
    m2 = rng.standard_normal(n_points)
    mu = np.ascontiguousarray(rng.standard_normal((3, n_points)))
    v12 = rng.standard_normal(n_points)
    a12 = rng.standard_normal(n_points)
    cap = np.zeros(n_points)
    flat = [amps.reshape(-1).copy() for _ in range(3)]

    rows = {}
    for name in ("numba", "numpy"):
        k = get_kernels(name)
        t_couple = time_call(
            k.pa_couple, out, amps, vd, al, m2, mu, v12, a12, cap,
            0.1 + 0.05j, -0.2, 0.3 + 0.1j, 0j)
        t_cheb = time_call(k.cheb_combine, flat[0], flat[1], flat[2], 0.4 + 0.2j)
        rows[name] = (t_couple, t_cheb)
    return rows


def bench_full_step(n_points):
    cur = curves.model_mg2()
    g = grid.make_grid(1.0, 40.0, n_points)
    pulse = hamiltonian.make_pulse(fwhm_fs=100.0, lambda_nm=840.0,
                                   intensity_w_cm2=5e12)
    ham = hamiltonian.assemble_pa(55, cur, g, pulse)
    e0, e1 = propagator.estimate_spectral_range(ham)
    plan = propagator.real_time_plan(e0, e1, pulse.fwhm / 50, tolerance=1e-10)
    amps = np.zeros((5, n_points), np.complex128)
    amps[0] = np.exp(-((g.r - 20.0) ** 2))
    st = hamiltonian.pa_state(g, 55, ground_amps=amps[0])

    rows = {}
    for name in ("numba", "numpy"):
        import hotpa.propagator as prop
        saved = prop.kernels
        prop.kernels = get_kernels(name)
        try:
            t = time_call(
                lambda: propagator.chebyshev_real_step(st, ham, pulse.fwhm / 50,
                                                       plan=plan),
                repeat=10)
        finally:
            prop.kernels = saved
        rows[name] = (t, plan.order)
    return rows


def main(argv):
    sizes = [int(a) for a in argv[1:]] or [641, 1281, 2561]
    print(f"{'n_points':>9} {'kernel':>10} {'pa_couple':>12} {'cheb_combine':>13}")
    for n in sizes:
        rows = bench_kernels(n)
        for name, (tc, tb) in rows.items():
            print(f"{n:>9} {name:>10} {tc * 1e6:>10.1f}us {tb * 1e6:>11.1f}us")
        speedup = rows["numpy"][0] / rows["numba"][0]
        print(f"{'':>9} {'speedup':>10} {speedup:>10.2f}x  (coupling kernel)")
    print()
    print("full Chebyshev pump step (order shown):")
    for n in sizes:
        rows = bench_full_step(n)
        for name, (t, order) in rows.items():
            print(f"{n:>9} {name:>10} {t * 1e3:>10.2f}ms  order={order}")
        print(f"{'':>9} {'speedup':>10} "
              f"{rows['numpy'][0] / rows['numba'][0]:>10.2f}x")


if __name__ == "__main__":
    main(sys.argv)
