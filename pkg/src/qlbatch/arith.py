"""Integer machinery: windowed factorization sieve, fundamental-discriminant
classification, the quadratic character, and inclusion-exclusion divisors.

The character chi_q for odd fundamental q = 1 (mod 4) is the quadratic
symbol; by reciprocity it equals the Jacobi symbol (n/q) for every n, which
is what quad_character evaluates.  CharacterSieve amortizes whole-interval
character tables down to one symbol evaluation per prime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .counters import OpCounter
from .errors import DomainError

# Conductors below this route to the per-character oracle.
FAST_PATH_MIN_Q = 10_000

_SIEVE_BLOCK = 1 << 20  # odd values per segment


@dataclass(frozen=True)
class Window:
    """Conductor interval [Q, Q+Delta)."""

    Q: int
    Delta: int

    def __post_init__(self) -> None:
        if not (isinstance(self.Q, (int, np.integer)) and self.Q >= 1):
            raise DomainError("window requires integer Q >= 1")
        if not (isinstance(self.Delta, (int, np.integer)) and self.Delta >= 1):
            raise DomainError("window requires integer Delta >= 1")
        # the Taylor variable x = (Q - q)/q needs |x| < 1/2 over the whole
        # window; boundary Delta = Q/2 admitted so power-of-two scaling
        # windows are expressible
        if 2 * self.Delta > self.Q:
            raise DomainError(
                f"window width {self.Delta} violates 1 <= Delta < Q/2 for Q={self.Q}"
            )


@dataclass(frozen=True)
class FactoredConductor:
    """A conductor q with its distinct prime divisors.

    primes multiply to q exactly when squarefree; fundamental means odd,
    squarefree and q = 1 (mod 4), in which case the character parity is 0.
    """

    q: int
    primes: tuple[int, ...]
    squarefree: bool
    fundamental: bool
    parity_class: int = 0

    @property
    def omega(self) -> int:
        return len(self.primes)

    @property
    def divisor_count(self) -> int:
        # d(q) = 2^omega for squarefree q
        return 1 << len(self.primes)


@dataclass(frozen=True)
class DivisorTerm:
    """One inclusion-exclusion term: subset product a with sign (-1)^h."""

    a: int
    sign: int


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd n >= 1, by binary reduction."""
    a = int(a)
    n = int(n)
    if n <= 0 or n % 2 == 0:
        raise DomainError("jacobi requires odd positive n")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


@lru_cache(maxsize=65536)
def _is_fundamental_odd_positive_int(q: int) -> bool:
    if q < 1 or q % 2 == 0 or q % 4 != 1:
        return False
    m = q
    p = 3
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return False
        p += 2
    return True


def quad_character(q: int, n: int) -> int:
    """chi_q(n) in {-1, 0, +1} for fundamental odd positive q."""
    q = int(q)
    n = int(n)
    if n < 1:
        raise DomainError("quad_character requires n >= 1")
    if not _is_fundamental_odd_positive_int(q):
        raise DomainError(f"q={q} is not an odd positive fundamental conductor")
    return jacobi(n % q, q)


def is_fundamental_odd_positive(fc: FactoredConductor) -> bool:
    return fc.q >= 1 and fc.q % 2 == 1 and fc.squarefree and fc.q % 4 == 1


def _odd_primes_upto(n: int) -> np.ndarray:
    if n < 3:
        return np.empty(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    primes = np.nonzero(sieve)[0].astype(np.int64)
    return primes[primes % 2 == 1]


def sieve_factor_window(
    window: Window, counter: OpCounter | None = None
) -> dict[int, FactoredConductor]:
    """Factor every odd q in [Q, Q+Delta) by a segmented sieve.

    Trial primes run up to sqrt(Q+Delta-1); whatever cofactor survives is
    prime.  Work is vectorized per prime across each segment.
    """
    lo, hi = window.Q, window.Q + window.Delta
    first = lo if lo % 2 == 1 else lo + 1
    qs_all = np.arange(first, hi, 2, dtype=np.int64)
    out: dict[int, FactoredConductor] = {}
    if qs_all.size == 0:
        return out
    base_primes = _odd_primes_upto(math.isqrt(int(hi - 1)))

    for s in range(0, qs_all.size, _SIEVE_BLOCK):
        qs = qs_all[s : s + _SIEVE_BLOCK]
        n_b = qs.size
        lo_b = int(qs[0])
        rem = qs.copy()
        sqfree = np.ones(n_b, dtype=bool)
        idx_parts: list[np.ndarray] = []
        p_parts: list[np.ndarray] = []
        for p in base_primes:
            p = int(p)
            m0 = ((lo_b + p - 1) // p) * p
            if m0 % 2 == 0:
                m0 += p
            start = (m0 - lo_b) >> 1
            if start >= n_b:
                continue
            ii = np.arange(start, n_b, p, dtype=np.int64)
            if counter is not None:
                counter.add("sieve_marks", ii.size)
            rem[ii] //= p
            again = rem[ii] % p == 0
            if np.any(again):
                sub = ii[again]
                sqfree[sub] = False
                r = rem[sub] // p
                mask = r % p == 0
                while np.any(mask):
                    r[mask] //= p
                    mask = r % p == 0
                rem[sub] = r
            idx_parts.append(ii)
            p_parts.append(np.full(ii.size, p, dtype=np.int64))
        res_idx = np.nonzero(rem > 1)[0]
        if counter is not None:
            counter.add("sieve_marks", res_idx.size)
        idx_parts.append(res_idx)
        p_parts.append(rem[res_idx].copy())

        idx_all = np.concatenate(idx_parts)
        p_all = np.concatenate(p_parts)
        order = np.lexsort((p_all, idx_all))
        idx_all = idx_all[order]
        p_all = p_all[order]
        bounds = np.searchsorted(idx_all, np.arange(n_b + 1))
        for i in range(n_b):
            q = int(qs[i])
            ps = tuple(int(x) for x in p_all[bounds[i] : bounds[i + 1]])
            sf = bool(sqfree[i])
            out[q] = FactoredConductor(
                q=q, primes=ps, squarefree=sf, fundamental=sf and q % 4 == 1
            )
    return out


def divisor_terms(fc: FactoredConductor, N: int) -> list[DivisorTerm]:
    """All subsets of {P | q : P <= N} with product <= N, as (a, (-1)^h).

    Valid for odd squarefree q (the inclusion-exclusion does not need
    q = 1 mod 4); always contains (1, +1).
    """
    if not (fc.squarefree and fc.q % 2 == 1):
        raise DomainError("divisor_terms requires an odd squarefree conductor")
    N = int(N)
    small = [p for p in fc.primes if p <= N]
    terms = [(1, 1)]
    for p in small:
        grown = []
        for a, sign in terms:
            ap = a * p
            if ap <= N:
                grown.append((ap, -sign))
        terms += grown
    terms.sort()
    return [DivisorTerm(a=a, sign=sign) for a, sign in terms]


class CharacterSieve:
    """Character tables chi_q(n), n <= N, with symbol calls only at primes.

    The smallest-prime-factor table and the composite levels (grouped by
    number of prime factors) are built once and shared across conductors;
    values(q) then assembles the completely multiplicative extension with a
    handful of vectorized gathers.
    """

    def __init__(self, N: int) -> None:
        N = int(N)
        if N < 1:
            raise DomainError("CharacterSieve requires N >= 1")
        self.N = N
        spf = np.zeros(N + 1, dtype=np.int64)
        for p in range(2, math.isqrt(N) + 1):
            if spf[p] == 0:
                seg = spf[p * p :: p]
                seg[seg == 0] = p
        ns = np.arange(N + 1, dtype=np.int64)
        prime_mask = spf[2:] == 0
        spf[2:][prime_mask] = ns[2:][prime_mask]
        self.spf = spf
        self.primes = ns[2:][prime_mask]
        cof = np.ones(N + 1, dtype=np.int64)
        if N >= 2:
            cof[2:] = ns[2:] // spf[2:]
        self.cof = cof
        omega = np.zeros(N + 1, dtype=np.int64)
        for n in range(2, N + 1):
            omega[n] = omega[cof[n]] + 1
        self._levels = [
            np.nonzero(omega == lev)[0]
            for lev in range(2, (int(omega.max()) if N >= 2 else 1) + 1)
        ]

    def values(self, q: int) -> np.ndarray:
        """float64 array v with v[n] = chi_q(n) for 0 <= n <= N."""
        q = int(q)
        if not _is_fundamental_odd_positive_int(q):
            raise DomainError(f"q={q} is not an odd positive fundamental conductor")
        chi = np.zeros(self.N + 1, dtype=np.float64)
        chi[1] = 1.0
        if self.primes.size:
            chi[self.primes] = [jacobi(int(p), q) for p in self.primes]
        for level in self._levels:
            chi[level] = chi[self.spf[level]] * chi[self.cof[level]]
        return chi
