"""Measure how batch precompute cost scales as the window doubles.

Runs the fast path at Q = 2^e for a range of exponents with Delta = Q/2 and
reports operation counts, wall times and the doubling ratios.  Amortized
near-linear scaling shows up as ratios close to 2.

    python3 scripts/scaling_study.py --exponents 14 15 16 17
"""

import argparse
import csv
import sys
from dataclasses import dataclass

from qlbatch import BatchRequest, OpCounter, Window, run_batch


@dataclass(frozen=True)
class StudyConfig:
    exponents: tuple
    epsilon: float
    t: float
    threads: int
    out: str | None


def parse_args(argv=None) -> StudyConfig:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--exponents", type=int, nargs="+", default=[14, 15, 16, 17],
                    help="window sizes Q = 2^e, each with Delta = Q/2")
    ap.add_argument("--epsilon", type=float, default=1e-6)
    ap.add_argument("--t", type=float, default=0.0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default=None, help="optional CSV of the raw rows")
    ns = ap.parse_args(argv)
    return StudyConfig(tuple(ns.exponents), ns.epsilon, ns.t, ns.threads, ns.out)


def main(argv=None) -> int:
    cfg = parse_args(argv)
    rows = []
    for e in cfg.exponents:
        Q = 1 << e
        counter = OpCounter()
        result = run_batch(
            BatchRequest(Window(Q, Q // 2), cfg.t, cfg.epsilon),
            threads=cfg.threads,
            counter=counter,
        )
        b = result.budget
        rows.append({
            "Q": Q,
            "n_characters": result.n_characters,
            "N": b.N if b else 0,
            "R": b.R if b else 0,
            "precompute_ops": result.precompute_ops,
            "recovery_ops": sum(result.recovery_ops.values()),
            "precompute_s": result.precompute_s,
            "wall_s": result.wall_time_s,
        })
        r = rows[-1]
        print(f"Q=2^{e:<3d} chars={r['n_characters']:<6d} N={r['N']:<5d} R={r['R']:<3d} "
              f"pre_ops={r['precompute_ops']:.3e} wall={r['wall_s']:.2f}s")
    print()
    for lo, hi in zip(rows, rows[1:]):
        ops_ratio = hi["precompute_ops"] / lo["precompute_ops"]
        wall_ratio = hi["wall_s"] / max(lo["wall_s"], 1e-9)
        per_char = hi["precompute_ops"] / hi["n_characters"]
        print(f"Q {lo['Q']} -> {hi['Q']}: ops x{ops_ratio:.2f}  wall x{wall_ratio:.2f}  "
              f"ops/char {per_char:.3e}")
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {cfg.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
