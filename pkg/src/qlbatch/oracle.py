"""Brute-force reference evaluation of Z(t, chi_q), one conductor at a time.

Independent of the batch pipeline by construction: this module touches only
the special-function kernel and the arithmetic helpers, never the Taylor
tables or the multi-evaluation engine.  Each value is a direct smoothed sum

    Z(t, chi_q) = 2 Re[ e^{i theta(t, q)} sum_(n<=N) chi_q(n) n^(-1/2-it)
                         V(pi n^2 / q) ],

with V(w) = Gamma(z2, w) / Gamma(z2), z2 = 1/4 + it/2, cut at an N whose
dropped tail is certified below the returned tail_bound.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .arith import (
    CharacterSieve,
    Window,
    _is_fundamental_odd_positive_int,
    jacobi,
    sieve_factor_window,
)
from .counters import OpCounter
from .errors import DomainError
from .special import _g_kernel_arr, log_gamma, theta_phase

_T_MAX = 10.0
_CHUNK = 64  # conductors per batched kernel call in sweeps


@dataclass(frozen=True)
class OracleResult:
    """One certified reference value together with its truncation record."""

    q: int
    t: float
    Z: float
    N_used: int
    tail_bound: float


def _truncation_order(q: int, epsilon: float) -> tuple[int, float]:
    """Smallest N whose tail budget epsilon/8 is met for conductor q."""
    eps1 = epsilon / 8.0
    N = math.ceil(math.sqrt((2.0 * q / math.pi) * math.log(q / eps1)))
    return max(N, 1), eps1


def _gamma_abs(t: float) -> float:
    """|Gamma(1/4 + it/2)|, the normalization entering the tail bound."""
    return math.exp(log_gamma(0.25 + 0.5j * t).real)


def _certified_tail(q: int, N: int, gamma_abs: float) -> float:
    """Rigorous bound on 2 sum_(n>N) n^(-1/2) |V(pi n^2/q)|.

    Uses |Gamma(z2, w)| <= w^(-3/4) e^(-w) for Re z2 = 1/4 and a geometric
    majorant for the lattice tail.
    """
    return (
        (q / math.pi) ** 0.75
        * q
        * math.exp(-math.pi * N * N / q)
        / (math.pi * N ** 3 * gamma_abs)
    )


def _validate_scalar_inputs(q: int, t: float, epsilon: float) -> None:
    if not _is_fundamental_odd_positive_int(q):
        raise DomainError(f"q={q} is not an odd positive fundamental conductor")
    if abs(t) > _T_MAX:
        raise DomainError(f"|t|={abs(t):g} exceeds the supported range |t| <= {_T_MAX:g}")
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon={epsilon!r} must lie in (0, 1)")


def _character_values(q: int, N: int) -> np.ndarray:
    """chi_q(1..N) by direct Jacobi symbols (no shared sieve machinery)."""
    return np.array([jacobi(n % q, q) for n in range(1, N + 1)], dtype=np.float64)


def _smoothed_sum(q: int, t: float, chi: np.ndarray, V: np.ndarray) -> complex:
    """sum chi(n) n^(-1/2-it) V_n with compensated real/imag accumulation."""
    n = np.arange(1, chi.size + 1, dtype=np.float64)
    terms = chi * np.exp((-0.5 - 1j * t) * np.log(n)) * V
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def direct_F(
    q: int,
    t: float,
    epsilon: float | None = None,
    *,
    N: int | None = None,
    form: str = "v",
    counter: OpCounter | None = None,
) -> complex:
    """The inner smoothed sum F(t, chi_q) alone, truncated at N.

    form="v" uses chi(n) n^(-1/2-it) V(pi n^2/q); form="cg" uses the
    algebraically equal product C(t, q) sum chi(n) G_z2(pi n^2/q).  The two
    routes share only the incomplete-gamma kernel, so their agreement checks
    the prefactor identity.
    """
    q = int(q)
    if epsilon is None and N is None:
        raise DomainError("direct_F needs either epsilon or an explicit N")
    if not _is_fundamental_odd_positive_int(q):
        raise DomainError(f"q={q} is not an odd positive fundamental conductor")
    if abs(t) > _T_MAX:
        raise DomainError(f"|t|={abs(t):g} exceeds the supported range |t| <= {_T_MAX:g}")
    if N is None:
        N, _ = _truncation_order(q, float(epsilon))
    N = int(N)
    if N < 1:
        raise DomainError("direct_F requires N >= 1")
    if counter is not None:
        counter.add("oracle_special_calls", N)
    z2 = 0.25 + 0.5j * t
    n = np.arange(1, N + 1, dtype=np.float64)
    w = math.pi * n * n / q
    G = _g_kernel_arr(z2, w)
    chi = _character_values(q, N)
    if form == "v":
        V = np.exp(z2 * np.log(w) - log_gamma(z2)) * G
        return _smoothed_sum(q, t, chi, V)
    if form == "cg":
        pref = cmath.exp(z2 * cmath.log(math.pi / q) - log_gamma(z2))
        terms = chi * G
        inner = complex(math.fsum(terms.real), math.fsum(terms.imag))
        return pref * inner
    raise DomainError(f"unknown form {form!r}")


def direct_Z(
    q: int,
    t: float,
    epsilon: float,
    *,
    counter: OpCounter | None = None,
) -> OracleResult:
    """Certified reference Z(t, chi_q) for a single conductor."""
    q = int(q)
    t = float(t)
    epsilon = float(epsilon)
    _validate_scalar_inputs(q, t, epsilon)
    N, eps1 = _truncation_order(q, epsilon)
    F = direct_F(q, t, N=N, form="v", counter=counter)
    theta = theta_phase(t, 0, q)
    Z = 2.0 * (cmath.exp(1j * theta) * F).real
    tail = _certified_tail(q, N, _gamma_abs(t))
    # the planned N always beats its own budget
    assert tail < eps1
    return OracleResult(q=q, t=t, Z=float(Z), N_used=N, tail_bound=tail)


def oracle_sweep(
    window: Window,
    t: float,
    epsilon: float,
    *,
    threads: int = 1,
    counter: OpCounter | None = None,
    fc_table=None,
) -> list[OracleResult]:
    """direct_Z over every fundamental conductor in a window, batched.

    Shares one character sieve across the window and concatenates kernel
    arguments over blocks of conductors, which keeps the per-q cost at the
    level of its Jacobi symbols.  Results match per-q direct_Z to roundoff
    and come back sorted by q.
    """
    t = float(t)
    epsilon = float(epsilon)
    if abs(t) > _T_MAX:
        raise DomainError(f"|t|={abs(t):g} exceeds the supported range |t| <= {_T_MAX:g}")
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon={epsilon!r} must lie in (0, 1)")
    if fc_table is None:
        fc_table = sieve_factor_window(window)
    qs = sorted(q for q, fc in fc_table.items() if fc.fundamental)
    if not qs:
        return []
    N_max, _ = _truncation_order(qs[-1], epsilon)
    sieve = CharacterSieve(N_max)
    z2 = 0.25 + 0.5j * t
    lg = log_gamma(z2)
    gamma_abs = math.exp(lg.real)

    def run_block(block: list[int]) -> list[OracleResult]:
        Ns = [_truncation_order(q, epsilon)[0] for q in block]
        offs = np.concatenate(([0], np.cumsum(Ns)))
        wcat = np.empty(int(offs[-1]), dtype=np.float64)
        for i, (q, Nq) in enumerate(zip(block, Ns)):
            n = np.arange(1, Nq + 1, dtype=np.float64)
            wcat[offs[i] : offs[i + 1]] = math.pi * n * n / q
        Vcat = np.exp(z2 * np.log(wcat) - lg) * _g_kernel_arr(z2, wcat)
        out = []
        for i, (q, Nq) in enumerate(zip(block, Ns)):
            chi = sieve.values(q)[1 : Nq + 1]
            F = _smoothed_sum(q, t, chi, Vcat[offs[i] : offs[i + 1]])
            theta = theta_phase(t, 0, q)
            Z = 2.0 * (cmath.exp(1j * theta) * F).real
            if counter is not None:
                counter.add("oracle_special_calls", Nq)
            out.append(
                OracleResult(
                    q=q, t=t, Z=float(Z), N_used=Nq,
                    tail_bound=_certified_tail(q, Nq, gamma_abs),
                )
            )
        return out

    blocks = [qs[i : i + _CHUNK] for i in range(0, len(qs), _CHUNK)]
    if threads == 1 or len(blocks) == 1:
        per_block = [run_block(b) for b in blocks]
    else:
        workers = threads if threads > 0 else None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_block = list(pool.map(run_block, blocks))
    return [res for blk in per_block for res in blk]
