#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the gate-application kernels on statevectors of growing size and
the batched ansatz-preparation kernel at VQE working shapes, printing
per-call timings and the speedup. Run from the repo root:

    python benchmarks/bench_backends.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from hywf._kernels import _fallback

try:
    from hywf._kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeats):
    # warm up once, then take the best of three timing runs
    fn()
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best


def bench_gates(backend, n, repeats, rng):
    state = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    state /= np.linalg.norm(state)
    state = np.ascontiguousarray(state)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    cnot = np.eye(4, dtype=complex)
    cnot[[2, 3]] = cnot[[3, 2]]
    fredkin = np.eye(8, dtype=complex)
    fredkin[[5, 6]] = fredkin[[6, 5]]
    out = {}
    work = state.copy()
    out["1q"] = timeit(lambda: backend.apply_1q(work, h, n, n // 2), repeats)
    out["2q"] = timeit(lambda: backend.apply_2q(work, cnot, n, 0, n - 1), repeats)
    if n >= 3:
        out["3q"] = timeit(
            lambda: backend.apply_3q(work, fredkin, n, 0, n // 2, n - 1), repeats
        )
    return out


def bench_ansatz(backend, n, layers, batch, repeats, rng):
    thetas = rng.uniform(-np.pi, np.pi, size=(batch, layers * n))
    pairs = np.array([(q, q + 1) for q in range(n - 1)], dtype=np.int64).reshape(-1, 2)
    return timeit(lambda: backend.ry_ansatz_states(thetas, n, layers, pairs), repeats)


def fmt(seconds):
    if seconds < 1e-3:
        return f"{seconds * 1e6:8.1f} us"
    return f"{seconds * 1e3:8.2f} ms"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    if _core is None:
        print("compiled extension not built; showing the NumPy fallback only")
    backends = [("numpy", _fallback)] + ([("cython", _core)] if _core else [])

    print("\ngate application (per call)")
    print(f"{'kernel':<10} {'qubits':>6} " + "".join(f"{name:>12}" for name, _ in backends)
          + ("   speedup" if _core else ""))
    for n in (4, 8, 12, 16, 20):
        rows = {name: bench_gates(mod, n, max(5, args.repeats // (1 << max(0, n - 10))), rng)
                for name, mod in backends}
        for kernel in ("1q", "2q", "3q"):
            if kernel not in rows["numpy"]:
                continue
            line = f"{kernel:<10} {n:>6} " + "".join(
                fmt(rows[name][kernel]).rjust(12) for name, _ in backends
            )
            if _core:
                line += f"   {rows['numpy'][kernel] / rows['cython'][kernel]:7.1f}x"
            print(line)

    print("\nbatched RY+CNOT ansatz preparation (per call)")
    print(f"{'shape':<24} " + "".join(f"{name:>12}" for name, _ in backends)
          + ("   speedup" if _core else ""))
    for n, layers, batch in ((2, 3, 13), (3, 4, 25), (4, 5, 41), (5, 6, 61)):
        times = {name: bench_ansatz(mod, n, layers, batch, args.repeats, rng)
                 for name, mod in backends}
        label = f"n={n} L={layers} batch={batch}"
        line = f"{label:<24} " + "".join(fmt(times[name]).rjust(12) for name, _ in backends)
        if _core:
            line += f"   {times['numpy'] / times['cython']:7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
