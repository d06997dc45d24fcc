"""
Kernel backend benchmark: compiled extension vs numpy fallback.

Times the three hot kernels on workloads shaped like real runs:
  walk_step        iterated position-space walk from one site
  two_mode_table   Loschmidt amplitude on a k x t grid
  phase_increments wrapped phase differences on a long complex signal

Run from the repo root after an editable install:
  python3 benchmarks/bench_kernels.py
  python3 benchmarks/bench_kernels.py --steps 600 --repeat 7
"""

import argparse
import time

import numpy as np

from dqptwalk import _kernels_py

try:
    from dqptwalk import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    # warm up once, then keep the minimum; median is noisier for short runs
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def walk_workload(mod, steps):
    # lossy split-step angles; keep_amp = sqrt(1 - l)
    half, full = np.pi / 8, 3 * np.pi / 16
    r = np.sqrt(1.0 - 0.36)
    gamma = (1.0 - 0.36) ** -0.25

    def run():
        psi = np.zeros((2, 1), dtype=complex)
        psi[0, 0] = 1 / np.sqrt(2)
        psi[1, 0] = -1j / np.sqrt(2)
        for _ in range(steps):
            psi = mod.walk_step(psi, half, full, full, half, r, gamma)
        return psi

    return run


def table_workload(mod, n_k, n_t):
    rng = np.random.default_rng(0)
    energy = rng.uniform(0.1, np.pi - 0.1, n_k) + 0j
    a = rng.uniform(0, 1, n_k) * np.exp(1j * rng.uniform(-np.pi, np.pi, n_k))
    b = 1.0 - a
    times = np.linspace(0.0, 7.0, n_t)
    return lambda: mod.two_mode_table(a, b, energy, times)


def phase_workload(mod, n):
    rng = np.random.default_rng(1)
    z = np.exp(1j * np.cumsum(rng.uniform(-0.3, 0.3, n)))
    return lambda: mod.phase_increments(z)


def main():
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--steps", type=int, default=400, help="walk steps per run")
    ap.add_argument("--kpoints", type=int, default=2048)
    ap.add_argument("--tpoints", type=int, default=701)
    ap.add_argument("--signal", type=int, default=1 << 20,
                    help="phase_increments input length")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if _kernels is None:
        print("compiled extension not built; timing the numpy fallback only")

    cases = [
        (f"walk_step x{args.steps}", lambda m: walk_workload(m, args.steps)),
        (f"two_mode_table {args.kpoints}x{args.tpoints}",
         lambda m: table_workload(m, args.kpoints, args.tpoints)),
        (f"phase_increments n={args.signal}",
         lambda m: phase_workload(m, args.signal)),
    ]

    print(f"{'kernel':<34}{'python':>10}{'compiled':>10}{'speedup':>9}")
    for name, make in cases:
        t_py = best_of(make(_kernels_py), args.repeat)
        if _kernels is not None:
            # cross-check outputs before trusting the timings
            ref = make(_kernels_py)()
            got = make(_kernels)()
            err = float(np.abs(np.asarray(got) - np.asarray(ref)).max())
            if err > 1e-12:
                raise SystemExit(f"{name}: backends disagree by {err:.2e}")
            t_c = best_of(make(_kernels), args.repeat)
            print(f"{name:<34}{t_py * 1e3:>8.2f}ms{t_c * 1e3:>8.2f}ms"
                  f"{t_py / t_c:>8.1f}x")
        else:
            print(f"{name:<34}{t_py * 1e3:>8.2f}ms{'-':>10}{'-':>9}")


if __name__ == "__main__":
    main()
