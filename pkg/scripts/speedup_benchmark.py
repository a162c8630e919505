"""Time the batch fast path against per-conductor direct evaluation.

Both routes produce Z(t, chi_q) for every fundamental conductor in the
window; the direct route prices each conductor separately, the fast route
amortizes the heavy work across the whole window.

    python3 scripts/speedup_benchmark.py --q 200000
"""

import argparse
import time
from dataclasses import dataclass

from qlbatch import BatchRequest, Window, oracle_sweep, run_batch


@dataclass(frozen=True)
class BenchConfig:
    Q: int
    width_frac: float
    epsilon: float
    t: float
    threads: int


def parse_args(argv=None) -> BenchConfig:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=int, default=200_000, help="window start Q")
    ap.add_argument("--width-frac", type=float, default=0.5,
                    help="Delta as a fraction of Q (at most 0.5)")
    ap.add_argument("--epsilon", type=float, default=1e-6)
    ap.add_argument("--t", type=float, default=0.0)
    ap.add_argument("--threads", type=int, default=1)
    ns = ap.parse_args(argv)
    return BenchConfig(ns.q, ns.width_frac, ns.epsilon, ns.t, ns.threads)


def main(argv=None) -> int:
    cfg = parse_args(argv)
    window = Window(cfg.Q, max(1, int(cfg.Q * cfg.width_frac)))
    print(f"window [{window.Q}, {window.Q + window.Delta}), epsilon={cfg.epsilon:g}, t={cfg.t:g}")

    result = run_batch(
        BatchRequest(window, cfg.t, cfg.epsilon), threads=cfg.threads
    )
    fast_wall = result.wall_time_s
    print(f"fast path: {result.n_characters} conductors in {fast_wall:.2f} s "
          f"(precompute {result.precompute_s:.2f} s, recovery {result.recovery_s:.2f} s)")

    t0 = time.perf_counter()
    refs = oracle_sweep(window, cfg.t, cfg.epsilon, threads=cfg.threads)
    direct_wall = time.perf_counter() - t0
    print(f"direct route: {len(refs)} conductors in {direct_wall:.2f} s")

    worst = max(
        (abs(rec.Z - ref.Z) for rec, ref in zip(result.records, refs)), default=0.0
    )
    print(f"max |Z_fast - Z_direct| = {worst:.3e}")
    print(f"speedup: {direct_wall / fast_wall:.1f}x  "
          f"({1e3 * fast_wall / max(result.n_characters, 1):.3f} ms/char amortized vs "
          f"{1e3 * direct_wall / max(len(refs), 1):.3f} ms/char direct)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
