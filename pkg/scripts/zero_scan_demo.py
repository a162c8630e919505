"""Locate certified sign changes of Z(t, chi_q) on a t-grid.

Z is real with the same zeros as L(1/2 + it, chi_q), so a sign change
between grid points brackets a zero on the critical line.  A bracket is
certified when both endpoint values clear twice the evaluation error.

    python3 scripts/zero_scan_demo.py --q-min 100003 --q-width 64 --t-max 3
"""

import argparse
from dataclasses import dataclass

from qlbatch import BatchRequest, Window, run_batch


@dataclass(frozen=True)
class ScanConfig:
    q_min: int
    q_width: int
    t_max: float
    t_step: float
    epsilon: float
    threads: int


def parse_args(argv=None) -> ScanConfig:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q-min", type=int, default=100_003)
    ap.add_argument("--q-width", type=int, default=64)
    ap.add_argument("--t-max", type=float, default=3.0)
    ap.add_argument("--t-step", type=float, default=0.25)
    ap.add_argument("--epsilon", type=float, default=1e-6)
    ap.add_argument("--threads", type=int, default=1)
    ns = ap.parse_args(argv)
    return ScanConfig(ns.q_min, ns.q_width, ns.t_max, ns.t_step, ns.epsilon, ns.threads)


def main(argv=None) -> int:
    cfg = parse_args(argv)
    window = Window(cfg.q_min, cfg.q_width)
    ts = []
    tv = 0.0
    while tv <= cfg.t_max + 1e-12:
        ts.append(round(tv, 12))
        tv += cfg.t_step

    sweeps = {}
    qs = None
    for tv in ts:
        result = run_batch(
            BatchRequest(window, tv, cfg.epsilon), threads=cfg.threads
        )
        sweeps[tv] = {r.q: r.Z for r in result.records}
        if qs is None:
            qs = [r.q for r in result.records]
    print(f"{len(qs)} conductors, {len(ts)} heights in [0, {cfg.t_max:g}]")

    n_brackets = n_certified = 0
    for q in qs:
        for t_lo, t_hi in zip(ts, ts[1:]):
            z_lo, z_hi = sweeps[t_lo][q], sweeps[t_hi][q]
            if z_lo == 0.0 or z_hi == 0.0 or (z_lo > 0) == (z_hi > 0):
                continue
            n_brackets += 1
            certified = min(abs(z_lo), abs(z_hi)) > 2 * cfg.epsilon
            n_certified += certified
            tag = "certified" if certified else "tentative"
            print(f"q={q}: zero in ({t_lo:g}, {t_hi:g})  "
                  f"Z: {z_lo:+.3e} -> {z_hi:+.3e}  [{tag}]")
    print(f"{n_brackets} sign changes, {n_certified} certified")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
