"""Window-sweep orchestration: plan, precompute, recover Z per conductor.

One batch run covers every fundamental odd conductor q in [Q, Q+Delta).  The
precompute phase builds the shared Taylor coefficient table, then evaluates
one node problem per realized divisor a on the rescaled grid b = q/a; the
recovery phase assembles, for each q, the divisor combination

    F = C(t, q) g(q) sum_r x^r sum_(a|q) mu-sign(a) sqrt(a) S_r(a, q/a),

with x = (Q - q)/q, and finally Z = 2 Re[e^{i theta} F].  Everything after
the S-tables is O(d(q) R) per conductor.
"""

from __future__ import annotations

import os
import statistics
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .arith import (
    FAST_PATH_MIN_Q,
    FactoredConductor,
    Window,
    divisor_terms,
    sieve_factor_window,
)
from .counters import OpCounter
from .errors import ConsistencyError, DomainError
from .multieval import build_node_problem, direct_eval, fast_eval
from .oracle import oracle_sweep
from .special import c_prefactor, g_prefactor, theta_phase
from .taylor import (
    CoefficientTable,
    ErrorBudget,
    build_coefficient_table,
    cache_file_name,
    load_coefficient_table,
    plan_budget,
    save_coefficient_table,
)

_METHODS = ("fast", "direct", "compare")
_CONVENTIONS = ("sqrt_a", "plain_a")
_T_WARN = 1.0

# counter keys whose sum is the precompute work volume
_PRECOMPUTE_KEYS = (
    "sieve_marks",
    "kernel_evals",
    "fast_eval_ops",
    "direct_eval_ops",
    "node_raw",
)


@dataclass(frozen=True)
class BatchRequest:
    """One window sweep: conductors in [Q, Q+Delta) at a fixed t."""

    window: Window
    t: float
    epsilon: float
    method: str = "fast"

    def __post_init__(self) -> None:
        if self.method not in _METHODS:
            raise DomainError(f"method must be one of {_METHODS}, got {self.method!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError(f"epsilon={self.epsilon!r} must lie in (0, 1)")
        if abs(self.t) > 10.0:
            raise DomainError(f"|t|={abs(self.t):g} exceeds the supported range |t| <= 10")


@dataclass(eq=False)
class STable:
    """Per-divisor evaluated node sums: a -> (b0, values of shape (R, H))."""

    entries: dict
    convention: str

    def value_vector(self, a: int, b: int) -> np.ndarray:
        """The R partial sums S_r(a, b); ConsistencyError if never computed."""
        try:
            b0, values = self.entries[a]
        except KeyError:
            raise ConsistencyError(f"no S-table entry for divisor a={a}") from None
        col = b - b0
        if not 0 <= col < values.shape[1]:
            raise ConsistencyError(
                f"argument b={b} outside the grid [{b0}, {b0 + values.shape[1]}) for a={a}"
            )
        return values[:, col]


@dataclass(frozen=True)
class EvalRecord:
    """One output row of a batch run."""

    q: int
    t: float
    Z: float
    theta: float
    error_bound: float
    method: str


@dataclass(eq=False)
class BatchResult:
    """Records plus the budget, counters and phase timings of one run."""

    records: list
    method: str
    budget: ErrorBudget | None
    counts: dict
    wall_time_s: float
    precompute_s: float
    recovery_s: float
    recovery_ops: dict = field(default_factory=dict)
    compare_max_dev: float | None = None
    compare_mean_dev: float | None = None
    compare_devs: list | None = None
    compare_refs: list | None = None

    @property
    def n_characters(self) -> int:
        return len(self.records)

    @property
    def precompute_ops(self) -> int:
        return sum(self.counts.get(k, 0) for k in _PRECOMPUTE_KEYS)


def realized_divisors(fc_table: dict, N: int) -> list:
    """Sorted union of squarefree divisors a <= N over fundamental q.

    Always contains 1: every fundamental conductor realizes the trivial
    divisor, and an empty window still prices the a=1 node problem.
    """
    N = int(N)
    out = {1}
    for fc in fc_table.values():
        if not fc.fundamental:
            continue
        for term in divisor_terms(fc, N):
            out.add(term.a)
    return sorted(out)


def compute_s_tables(
    request: BatchRequest,
    table: CoefficientTable,
    *,
    budget: ErrorBudget | None = None,
    divisors: list | None = None,
    fc_table: dict | None = None,
    counter: OpCounter | None = None,
    threads: int = 1,
    convention: str = "sqrt_a",
) -> STable:
    """Evaluate every divisor's node problem over its rescaled grid.

    method "fast" (and "compare") uses the gridded transform with the
    planned eps3; method "direct" forces the exact-angle reference path.
    threads > 1 evaluates divisors concurrently; results are equal either
    way because each divisor is independent.
    """
    if convention not in _CONVENTIONS:
        raise DomainError(f"unknown assembly convention {convention!r}")
    if budget is None:
        budget = plan_budget(request.window.Q, request.window.Delta, request.epsilon, request.t)
    if divisors is None:
        if fc_table is None:
            fc_table = sieve_factor_window(request.window, counter)
        divisors = realized_divisors(fc_table, budget.N)

    def run_one(a: int):
        built = build_node_problem(
            a, table, request.window, convention=convention, counter=counter
        )
        if built is None:
            return a, None
        problem, grid = built
        if request.method == "direct":
            values = direct_eval(problem, grid, counter)
        else:
            values = fast_eval(problem, grid, budget.epsilon3, counter)
        return a, (grid.b0, values)

    if threads == 1 or len(divisors) <= 1:
        results = [run_one(a) for a in divisors]
    else:
        workers = threads if threads > 0 else os.cpu_count()
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, divisors))
    entries = {a: entry for a, entry in results if entry is not None}
    return STable(entries=entries, convention=convention)


def assemble_F(
    q: FactoredConductor,
    s: STable,
    budget: ErrorBudget,
    table: CoefficientTable,
    *,
    terms=None,
    counter: OpCounter | None = None,
) -> complex:
    """Recover F(t, chi_q) from the shared S-tables in O(d(q) R) time."""
    if terms is None:
        terms = divisor_terms(q, budget.N)
    R = budget.R
    acc = np.zeros(R, dtype=np.complex128)
    comp = np.zeros(R, dtype=np.complex128)
    for term in terms:
        b = q.q // term.a
        # q odd makes every cofactor odd; the quarter-length Gauss identity
        # behind the S-tables needs that
        assert b % 2 == 1
        vec = s.value_vector(term.a, b)
        if s.convention == "sqrt_a":
            weight = term.sign * np.sqrt(term.a)
        else:
            weight = term.sign * float(term.a)
        y = weight * vec - comp
        tot = acc + y
        comp = (tot - acc) - y
        acc = tot
    x = (budget.Q - q.q) / q.q
    xp = x ** np.arange(R, dtype=np.float64)
    inner = complex(np.dot(acc, xp))
    if counter is not None:
        counter.add("recovery_ops", R * (len(terms) + 2))
    return complex(c_prefactor(table.t, q.q) * g_prefactor(q.q) * inner)


def compute_Z(q, F: complex, t: float) -> float:
    """Fold the archimedean phase onto F: Z = 2 Re[e^{i theta(t, q)} F]."""
    qv = q.q if isinstance(q, FactoredConductor) else int(q)
    theta = theta_phase(t, 0, qv)
    return 2.0 * (np.exp(1j * theta) * complex(F)).real


def _load_or_build_table(
    t: float,
    Q: int,
    budget: ErrorBudget,
    cache_dir: str | None,
    counter: OpCounter,
) -> CoefficientTable:
    path = None
    if cache_dir:
        path = os.path.join(cache_dir, cache_file_name(t, Q, budget.N, budget.R))
        try:
            table = load_coefficient_table(path)
            if (
                table.t == t
                and table.Q == Q
                and table.N == budget.N
                and table.R == budget.R
            ):
                counter.add("cache_hits", 1)
                return table
        except FileNotFoundError:
            pass
        except (ValueError, OSError):
            pass  # corrupt or foreign file: rebuild below
        counter.add("cache_misses", 1)
    table = build_coefficient_table(t, Q, budget.N, budget.R, counter)
    if path is not None:
        try:
            os.makedirs(cache_dir, exist_ok=True)
            save_coefficient_table(table, path)
        except OSError:
            pass  # cache writes are best effort
    return table


def run_batch(
    request: BatchRequest,
    *,
    threads: int = 1,
    cache_dir: str | None = None,
    counter: OpCounter | None = None,
    convention: str = "sqrt_a",
) -> BatchResult:
    """Evaluate Z(t, chi_q) for every fundamental q in the request window.

    Small windows (Q below the fast-path threshold) route to the per-q
    oracle and come back labeled method="oracle".  method="compare" runs the
    fast path and then the oracle over the same window, recording the max
    and mean absolute deviation.
    """
    if convention not in _CONVENTIONS:
        raise DomainError(f"unknown assembly convention {convention!r}")
    if counter is None:
        counter = OpCounter()
    t_start = time.perf_counter()
    win = request.window
    if abs(request.t) > _T_WARN:
        warnings.warn(
            f"|t|={abs(request.t):g} > 1: the archimedean phase loses accuracy "
            "away from the central point",
            stacklevel=2,
        )

    if win.Q < FAST_PATH_MIN_Q:
        refs = oracle_sweep(win, request.t, request.epsilon, threads=threads, counter=counter)
        records = [
            EvalRecord(
                q=r.q,
                t=r.t,
                Z=r.Z,
                theta=theta_phase(request.t, 0, r.q),
                error_bound=request.epsilon / 4.0,
                method="oracle",
            )
            for r in refs
        ]
        wall = time.perf_counter() - t_start
        is_cmp = request.method == "compare"
        return BatchResult(
            records=records,
            method="oracle",
            budget=None,
            counts=counter.as_dict(),
            wall_time_s=wall,
            precompute_s=wall,
            recovery_s=0.0,
            recovery_ops={},
            compare_max_dev=0.0 if is_cmp else None,
            compare_mean_dev=0.0 if is_cmp else None,
            compare_devs=[0.0] * len(records) if is_cmp else None,
            compare_refs=[r.Z for r in records] if is_cmp else None,
        )

    budget = plan_budget(win.Q, win.Delta, request.epsilon, request.t)
    fc_table = sieve_factor_window(win, counter)
    table = _load_or_build_table(request.t, win.Q, budget, cache_dir, counter)
    divisors = realized_divisors(fc_table, budget.N)
    stable = compute_s_tables(
        request,
        table,
        budget=budget,
        divisors=divisors,
        counter=counter,
        threads=threads,
        convention=convention,
    )
    precompute_s = time.perf_counter() - t_start

    rec_start = time.perf_counter()
    label = "fast" if request.method == "compare" else request.method
    records = []
    recovery_ops = {}
    for q in sorted(fc_table):
        fc = fc_table[q]
        if not fc.fundamental:
            continue
        terms = divisor_terms(fc, budget.N)
        F = assemble_F(fc, stable, budget, table, terms=terms)
        Z = compute_Z(fc, F, request.t)
        theta = theta_phase(request.t, 0, q)
        a_total = sum(term.a for term in terms)
        bound = (
            2.0 * budget.epsilon1
            + 2.0 * budget.epsilon2
            + budget.epsilon3 * budget.R * a_total
        )
        ops = budget.R * (len(terms) + 2) + 8
        counter.add("recovery_ops", ops)
        recovery_ops[q] = ops
        records.append(
            EvalRecord(q=q, t=request.t, Z=Z, theta=theta, error_bound=bound, method=label)
        )
    recovery_s = time.perf_counter() - rec_start

    compare_max = compare_mean = None
    compare_devs = compare_refs = None
    if request.method == "compare":
        refs = oracle_sweep(
            win, request.t, request.epsilon, threads=threads, counter=counter,
            fc_table=fc_table,
        )
        if len(refs) != len(records) or any(
            rec.q != ref.q for rec, ref in zip(records, refs)
        ):
            raise ConsistencyError("oracle sweep and fast sweep disagree on the window")
        compare_devs = [abs(rec.Z - ref.Z) for rec, ref in zip(records, refs)]
        compare_refs = [ref.Z for ref in refs]
        compare_max = max(compare_devs, default=0.0)
        compare_mean = statistics.fmean(compare_devs) if compare_devs else 0.0

    wall = time.perf_counter() - t_start
    return BatchResult(
        records=records,
        method=request.method,
        budget=budget,
        counts=counter.as_dict(),
        wall_time_s=wall,
        precompute_s=precompute_s,
        recovery_s=recovery_s,
        recovery_ops=recovery_ops,
        compare_max_dev=compare_max,
        compare_mean_dev=compare_mean,
        compare_devs=compare_devs,
        compare_refs=compare_refs,
    )
