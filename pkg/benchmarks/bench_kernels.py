#!/usr/bin/env python3
"""Benchmark the measurement kernel backends against each other.

Times the per-qubit kernel (micro) on both implementations, then times full
protocol trial batches in subprocesses with BB84SIM_KERNELS forced to each
backend (end-to-end).  Usage: python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time
import timeit

import numpy as np

from bb84sim.kernels import _pykernels

try:
    from bb84sim.kernels import _ckernels
except ImportError:
    _ckernels = None


def make_inputs(rng, n):
    return (
        rng.integers(0, 2, n, dtype=np.uint8),
        rng.integers(0, 2, n, dtype=np.uint8),
        rng.integers(0, 2, n, dtype=np.uint8),
        rng.integers(-1, 2, n).astype(np.int8),
        rng.integers(0, 2, n, dtype=np.uint8),
        rng.integers(0, 2, n, dtype=np.uint8),
    )


def micro():
    rng = np.random.default_rng(0)
    print("== measure_bits micro-benchmark ==")
    print(f"{'n':>9}  {'python':>12}  {'c':>12}  {'speedup':>8}")
    for n in (215, 2_150, 21_500, 215_000, 1_000_000):
        args = make_inputs(rng, n)
        reps = max(3, 2_000_000 // n)
        t_py = min(timeit.repeat(lambda: _pykernels.measure_bits(*args), number=reps, repeat=3)) / reps
        if _ckernels is not None:
            t_c = min(timeit.repeat(lambda: _ckernels.measure_bits(*args), number=reps, repeat=3)) / reps
            print(f"{n:>9}  {t_py * 1e6:>10.1f}us  {t_c * 1e6:>10.1f}us  {t_py / t_c:>7.1f}x")
        else:
            print(f"{n:>9}  {t_py * 1e6:>10.1f}us  {'n/a':>12}  {'':>8}")


END_TO_END = """
import time
from bb84sim import kernels
from bb84sim.channel import AttackModel
from bb84sim.codes import builtin_pair
from bb84sim.protocol import ProtocolConfig, run_protocol

steane = builtin_pair("steane")
start = time.perf_counter()
for seed in range(2000):
    cfg = ProtocolConfig(stage1_pair=steane, stage2_pair=steane,
                         abort_threshold=0.124, rng_seed=seed)
    run_protocol(cfg, AttackModel.bitflip(0.05))
elapsed = time.perf_counter() - start
print(f"{kernels.backend()} {elapsed:.3f}")
"""


def end_to_end():
    print("\n== 2000 full protocol trials per backend ==")
    backends = ["python"] + (["c"] if _ckernels is not None else [])
    results = {}
    for backend in backends:
        env = dict(os.environ, BB84SIM_KERNELS=backend)
        proc = subprocess.run([sys.executable, "-c", END_TO_END],
                              capture_output=True, text=True, env=env)
        if proc.returncode != 0:
            print(f"{backend}: failed\n{proc.stderr}")
            continue
        name, elapsed = proc.stdout.split()
        results[name] = float(elapsed)
        print(f"{name:>8}: {float(elapsed):.3f}s")
    if len(results) == 2:
        print(f" speedup: {results['python'] / results['c']:.2f}x "
              f"(whole trial, kernel plus orchestration)")


if __name__ == "__main__":
    if _ckernels is None:
        print("note: compiled kernel not importable; timing pure python only\n")
    micro()
    end_to_end()
