"""Command line front end.

Subcommands:
  eval      sweep a window and emit q,t,Z,theta,error_bound,method rows
  compare   sweep with the fast path, recompute with the reference oracle,
            report deviations; exit 1 on disagreement beyond the bounds
  scan      sweep a t-grid and report certified sign changes of Z per q
  selftest  run the built-in consistency suites with timings

Exit codes: 0 success, 1 comparison or selftest failure, 2 invalid
arguments, 3 budget or precision refusal, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
import time

import numpy as np

from .arith import Window
from .errors import AccuracyError, BudgetError, ConsistencyError, DomainError
from .pipeline import BatchRequest, run_batch

_ENV_CACHE = "QLF_CACHE_DIR"


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def _add_window_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q-min", type=int, required=True, help="window start Q (odd windows only need Q >= 1)")
    p.add_argument("--q-width", type=int, required=True, help="window width Delta; must satisfy Delta <= Q/2")
    p.add_argument("--t", type=float, default=0.0, help="height t on the critical line (|t| <= 10)")
    p.add_argument("--epsilon", type=float, default=1e-6, help="absolute accuracy target")
    p.add_argument("--threads", type=int, default=1, help="worker threads for the precompute phase (0 = all cores)")
    p.add_argument("--cache", default=None, help=f"coefficient table cache dir (default: ${_ENV_CACHE})")
    p.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlbatch",
        description="Batch evaluation of Z(t, chi_q) over windows of odd fundamental conductors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate Z over one window")
    _add_window_args(p_eval)
    p_eval.add_argument("--method", choices=("fast", "direct"), default="fast")
    p_eval.set_defaults(func=cmd_eval)

    p_cmp = sub.add_parser("compare", help="fast path versus reference oracle")
    _add_window_args(p_cmp)
    p_cmp.add_argument("--convention", choices=("sqrt_a", "plain_a"), default="sqrt_a",
                       help=argparse.SUPPRESS)
    p_cmp.set_defaults(func=cmd_compare)

    p_scan = sub.add_parser("scan", help="certified sign changes of Z over a t-grid")
    _add_window_args(p_scan)
    p_scan.add_argument("--t-min", type=float, required=True)
    p_scan.add_argument("--t-max", type=float, required=True)
    p_scan.add_argument("--t-step", type=float, required=True)
    p_scan.set_defaults(func=cmd_scan)

    p_self = sub.add_parser("selftest", help="run built-in consistency suites")
    p_self.add_argument("--convention", choices=("sqrt_a", "plain_a"), default="sqrt_a",
                        help=argparse.SUPPRESS)
    p_self.set_defaults(func=cmd_selftest)

    return parser


def _cache_dir(args) -> str | None:
    return args.cache if args.cache is not None else os.environ.get(_ENV_CACHE)


def _make_request(args, method: str) -> BatchRequest:
    window = Window(args.q_min, args.q_width)
    return BatchRequest(window=window, t=args.t, epsilon=args.epsilon, method=method)


@contextlib.contextmanager
def _open_out(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _write_records_csv(records, fh) -> None:
    fh.write("q,t,Z,theta,error_bound,method\n")
    for r in records:
        fh.write(
            f"{r.q},{_fmt(r.t)},{_fmt(r.Z)},{_fmt(r.theta)},{_fmt(r.error_bound)},{r.method}\n"
        )


def _write_records_json(result, request, fh) -> None:
    budget = result.budget
    doc = {
        "window": {"Q": request.window.Q, "Delta": request.window.Delta},
        "t": request.t,
        "epsilon": request.epsilon,
        "method": result.method,
        "budget": None
        if budget is None
        else {
            "epsilon1": budget.epsilon1,
            "epsilon2": budget.epsilon2,
            "epsilon3": budget.epsilon3,
            "N": budget.N,
            "R": budget.R,
        },
        "counts": result.counts,
        "records": [
            {
                "q": r.q,
                "t": r.t,
                "Z": r.Z,
                "theta": r.theta,
                "error_bound": r.error_bound,
                "method": r.method,
            }
            for r in result.records
        ],
    }
    json.dump(doc, fh, indent=2)
    fh.write("\n")


def cmd_eval(args) -> int:
    request = _make_request(args, args.method)
    result = run_batch(request, threads=args.threads, cache_dir=_cache_dir(args))
    with _open_out(args.out) as fh:
        if args.fmt == "csv":
            _write_records_csv(result.records, fh)
        else:
            _write_records_json(result, request, fh)
    return 0


def cmd_compare(args) -> int:
    request = _make_request(args, "compare")
    result = run_batch(
        request,
        threads=args.threads,
        cache_dir=_cache_dir(args),
        convention=args.convention,
    )
    tolerances = [r.error_bound + args.epsilon / 4.0 for r in result.records]
    bad = [
        (r.q, dev, tol)
        for r, dev, tol in zip(result.records, result.compare_devs, tolerances)
        if dev > tol
    ]
    with _open_out(args.out) as fh:
        if args.fmt == "csv":
            fh.write("q,t,Z_fast,Z_reference,abs_dev,tolerance\n")
            for r, ref, dev, tol in zip(
                result.records, result.compare_refs, result.compare_devs, tolerances
            ):
                fh.write(
                    f"{r.q},{_fmt(r.t)},{_fmt(r.Z)},{_fmt(ref)},{_fmt(dev)},{_fmt(tol)}\n"
                )
        else:
            doc = {
                "n_characters": result.n_characters,
                "max_dev": result.compare_max_dev,
                "mean_dev": result.compare_mean_dev,
                "n_fail": len(bad),
                "rows": [
                    {"q": r.q, "Z_fast": r.Z, "Z_reference": ref, "abs_dev": dev, "tolerance": tol}
                    for r, ref, dev, tol in zip(
                        result.records, result.compare_refs, result.compare_devs, tolerances
                    )
                ],
            }
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    print(
        f"compared {result.n_characters} conductors: max_dev={result.compare_max_dev:.3e} "
        f"mean_dev={result.compare_mean_dev:.3e}",
        file=sys.stderr,
    )
    if bad:
        worst = max(bad, key=lambda row: row[1])
        print(
            f"FAIL: {len(bad)} conductors beyond tolerance, worst q={worst[0]} "
            f"dev={worst[1]:.3e} tol={worst[2]:.3e}",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_scan(args) -> int:
    if args.t_step <= 0:
        raise DomainError("--t-step must be positive")
    if args.t_max < args.t_min:
        raise DomainError("--t-max must be at least --t-min")
    n_steps = int(math.floor((args.t_max - args.t_min) / args.t_step + 1e-9)) + 1
    ts = [args.t_min + i * args.t_step for i in range(n_steps)]
    window = Window(args.q_min, args.q_width)
    sweeps = {}
    qs = None
    for tv in ts:
        request = BatchRequest(window=window, t=tv, epsilon=args.epsilon, method="fast")
        result = run_batch(request, threads=args.threads, cache_dir=_cache_dir(args))
        cur = [r.q for r in result.records]
        if qs is None:
            qs = cur
        sweeps[tv] = {r.q: r.Z for r in result.records}
    rows = []
    for q in qs or []:
        for t_lo, t_hi in zip(ts, ts[1:]):
            z_lo = sweeps[t_lo][q]
            z_hi = sweeps[t_hi][q]
            if z_lo == 0.0 or z_hi == 0.0 or (z_lo > 0) == (z_hi > 0):
                continue
            certified = abs(z_lo) > 2.0 * args.epsilon and abs(z_hi) > 2.0 * args.epsilon
            rows.append((q, t_lo, t_hi, z_lo, z_hi, int(certified)))
    with _open_out(args.out) as fh:
        if args.fmt == "csv":
            fh.write("q,t_lo,t_hi,Z_lo,Z_hi,certified\n")
            for q, t_lo, t_hi, z_lo, z_hi, cert in rows:
                fh.write(
                    f"{q},{_fmt(t_lo)},{_fmt(t_hi)},{_fmt(z_lo)},{_fmt(z_hi)},{cert}\n"
                )
        else:
            doc = [
                {"q": q, "t_lo": t_lo, "t_hi": t_hi, "Z_lo": z_lo, "Z_hi": z_hi,
                 "certified": bool(cert)}
                for q, t_lo, t_hi, z_lo, z_hi, cert in rows
            ]
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    return 0


def _st_gauss_identities() -> None:
    from .arith import quad_character
    from .gauss import character_from_gauss, gauss_sum_direct, gauss_sum_fast

    rng = np.random.default_rng(20240811)
    for _ in range(120):
        b = int(rng.integers(0, 500)) * 2 + 1
        m = int(rng.integers(1, 300))
        fast = gauss_sum_fast(b, m)
        ref = gauss_sum_direct(b, 2 * m)
        if abs(fast - ref) > 1e-9 * max(1.0, abs(ref)):
            raise ConsistencyError(f"gauss_sum_fast({b}, {m}) != direct")
    for q in (5, 13, 17, 21, 33, 105, 145, 445):
        for n in range(1, 60):
            if math.gcd(n, q) != 1:
                continue
            rec = character_from_gauss(q, n)
            chi = quad_character(q, n)
            if abs(rec - chi) > 1e-9:
                raise ConsistencyError(f"character reconstruction failed at q={q}, n={n}")


def _st_budget_arithmetic() -> None:
    from .taylor import plan_budget, tail_bound, taylor_remainder_bound

    b = plan_budget(10_000, 5_000, 1e-6, 0.0)
    if (b.N, b.R) != (400, 32):
        raise ConsistencyError(f"reference budget mismatch: N={b.N}, R={b.R}")
    if not tail_bound(b.N, 10_000) < b.epsilon1:
        raise ConsistencyError("tail bound misses its budget")
    if not taylor_remainder_bound(b.N, 10_000, 5_000, b.R) < b.epsilon2:
        raise ConsistencyError("Taylor remainder misses its budget")
    try:
        plan_budget(1 << 40, 1 << 39, 1e-6, 0.0)
    except BudgetError:
        pass
    else:
        raise ConsistencyError("oversized window was not refused")


def _st_kernel_bounds() -> None:
    from scipy.integrate import quad

    from .special import g_kernel

    for z, w in ((0.25, 0.5), (0.25, 3.0), (1.5, 40.0), (0.75, 12.0)):
        ref, err = quad(lambda y, z=z, w=w: math.exp(-w * y) * y ** (z - 1.0), 1.0, np.inf)
        val = g_kernel(z, w)
        if abs(val.real - ref) > 1e-10 * max(abs(ref), 1e-300) + 1e-13:
            raise ConsistencyError(f"kernel quadrature mismatch at z={z}, w={w}")
    # upward recursion identity w G_(z+1) - z G_z = e^-w
    for z in (0.25 + 0.15j, 0.25 + 3j):
        for w in (0.3, 2.0, 11.0, 300.0):
            lhs = w * g_kernel(z + 1, w) - z * g_kernel(z, w)
            if abs(lhs - math.exp(-w)) > 1e-12:
                raise ConsistencyError(f"recursion identity fails at z={z}, w={w}")


def _st_multieval_agreement() -> None:
    from .multieval import EvalGrid, NodeSum, direct_eval, fast_eval

    rng = np.random.default_rng(991)
    K = 1500
    dens = rng.integers(1, 1600, size=K)
    nums = rng.integers(0, 1 << 30, size=K) % dens
    coeffs = rng.standard_normal((3, K)) + 1j * rng.standard_normal((3, K))
    p = NodeSum.from_fractions(nums, dens, coeffs)
    g = EvalGrid(b0=7_001, H=700)
    eps3 = 1e-9
    ref = direct_eval(p, g)
    fast = fast_eval(p, g, eps3, force="transform")
    worst = float(np.max(np.abs(fast - ref)))
    if worst > eps3 * p.scale:
        raise ConsistencyError(f"transform error {worst:.3e} above eps3 * scale")


def _st_window_consistency(convention: str) -> None:
    request = BatchRequest(window=Window(10_000, 32), t=0.3, epsilon=1e-6, method="compare")
    result = run_batch(request, convention=convention)
    for rec, dev in zip(result.records, result.compare_devs):
        if dev > rec.error_bound + request.epsilon / 4.0:
            raise ConsistencyError(
                f"fast path deviates from the oracle at q={rec.q}: {dev:.3e}"
            )


def cmd_selftest(args) -> int:
    suites = [
        ("gauss-identities", _st_gauss_identities),
        ("budget-arithmetic", _st_budget_arithmetic),
        ("kernel-bounds", _st_kernel_bounds),
        ("multieval-agreement", _st_multieval_agreement),
        ("window-consistency", lambda: _st_window_consistency(args.convention)),
    ]
    failures = 0
    for name, fn in suites:
        start = time.perf_counter()
        try:
            fn()
        except Exception as exc:  # report and keep going
            elapsed = time.perf_counter() - start
            print(f"FAIL {name:24s} {elapsed:7.2f} s  ({exc})")
            failures += 1
        else:
            elapsed = time.perf_counter() - start
            print(f"ok   {name:24s} {elapsed:7.2f} s")
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BudgetError, AccuracyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
