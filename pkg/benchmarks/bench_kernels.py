"""Timing comparison of the jit kernels against their fallback lanes.

Runs each hot kernel through both implementations on identical inputs,
checks the outputs agree, and prints the speedup. Force the fallback
package-wide with LOBKIT_DISABLE_NUMBA=1 (this script always calls both
lanes explicitly, independent of that switch).

Usage: python benchmarks/bench_kernels.py [--events N]
"""

import argparse
import os
import time

import numpy as np

from lobkit._accel import NUMBA_ENABLED
from lobkit._crc32c import _crc32c_numba, _crc32c_python
from lobkit.backtest import _strategy_kernel, _strategy_python
from lobkit.book import _replay_numba, _replay_python
from lobkit.synthetic import generate_synthetic


def timeit(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_replay(n_events):
    day = generate_synthetic(seed=99, n_events=n_events, with_snapshots=False)
    # warm the jit
    _replay_numba(day.events, 10)
    t_jit, out_jit = timeit(lambda: _replay_numba(day.events, 10))
    t_py, out_py = timeit(lambda: _replay_python(day.events, 10), repeat=1)
    assert np.array_equal(out_jit[0], out_py[0]), "replay lanes disagree"
    row("book replay", n_events, t_jit, t_py)


def bench_strategy(n_bars):
    rng = np.random.default_rng(3)
    opens = rng.uniform(50, 150, size=n_bars)
    closes = opens + rng.normal(0, 1, size=n_bars)
    sig = rng.integers(0, 3, size=n_bars).astype(np.int8)
    _strategy_kernel(sig, opens, closes, 10_000.0, 1)
    t_jit, out_jit = timeit(lambda: _strategy_kernel(sig, opens, closes, 10_000.0, 1))
    t_py, out_py = timeit(lambda: _strategy_python(sig, opens, closes, 10_000.0, 1))
    assert np.array_equal(out_jit[0], out_py[0]), "strategy lanes disagree"
    row("strategy loop", n_bars, t_jit, t_py)


def bench_crc(n_bytes):
    data = os.urandom(n_bytes)
    _crc32c_numba(b"warm")
    t_jit, a = timeit(lambda: _crc32c_numba(data))
    t_py, b = timeit(lambda: _crc32c_python(data), repeat=1)
    assert a == b, "crc lanes disagree"
    row("crc32c", n_bytes, t_jit, t_py)


def row(name, size, t_jit, t_py):
    print(
        f"{name:<14} n={size:>10,}  numba {t_jit*1e3:9.1f} ms  "
        f"fallback {t_py*1e3:9.1f} ms  speedup {t_py/t_jit:6.1f}x"
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--events", type=int, default=200_000)
    args = ap.parse_args()
    if not NUMBA_ENABLED:
        raise SystemExit("numba lane inactive (LOBKIT_DISABLE_NUMBA set or numba missing)")
    print(f"{'kernel':<14} {'input':>12}  {'numba':>15}  {'fallback':>18}  speedup")
    bench_replay(args.events)
    bench_strategy(200_000)
    bench_crc(20_000_000)


if __name__ == "__main__":
    main()
