"""Complex special functions for the main sum.

Everything here is a pure function: log-gamma, the upper incomplete gamma,
the exponentially weighted kernel

    G_z(w) = integral_1^inf exp(-w y) y^(z-1) dy = Gamma(z, w) / w^z,

its derivative rows, the smoothing weight V, the rotation phase theta, and
the two scalar prefactors C(t, q) and g(q).

The kernel is evaluated by a power series for small w and a continued
fraction for large w, with the crossover at w = |z| + 1.  Both branches are
vectorized over w with an active-set compaction so large batches pay only
for entries that have not yet converged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special as sc

from .errors import AccuracyError, DomainError

_TWO_SQRT_TWO = 2.0 * math.sqrt(2.0)
_EXP_UNDERFLOW = 745.0  # exp(-w) == 0.0 in binary64 beyond this
_SERIES_TOL = 1e-18
_LENTZ_TOL = 1e-16
_LENTZ_TINY = 1e-300
_MAX_ITER = 800


def log_gamma(z: complex) -> complex:
    """Principal branch of log Gamma(z)."""
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == int(z.real):
        raise DomainError(f"log_gamma pole at z={z}")
    return complex(sc.loggamma(z))


def _g_kernel_arr(z: complex, w: np.ndarray) -> np.ndarray:
    """Vectorized G_z(w) over an array of positive w."""
    z = complex(z)
    w = np.asarray(w, dtype=np.float64)
    flat = w.ravel()
    if flat.size and (not np.all(np.isfinite(flat)) or np.any(flat <= 0.0)):
        raise DomainError("g_kernel requires finite w > 0")
    out = np.empty(flat.shape, dtype=np.complex128)

    crossover = abs(z) + 1.0
    tiny = flat >= _EXP_UNDERFLOW
    small = ~tiny & (flat < crossover)
    large = ~tiny & ~small
    out[tiny] = 0.0

    if np.any(small):
        idx = np.nonzero(small)[0]
        ws = flat[idx]
        # G = Gamma(z) w^-z - exp(-w) * sum_k w^k / (z (z+1) ... (z+k))
        lg = sc.loggamma(z)
        term = np.full(idx.size, 1.0 / z, dtype=np.complex128)
        total = term.copy()
        pos = np.arange(idx.size)
        t_act = term
        w_act = ws
        k = 0
        while pos.size:
            k += 1
            if k > _MAX_ITER:
                raise AccuracyError("kernel series failed to converge")
            t_act = t_act * (w_act / (z + k))
            total[pos] += t_act
            keep = np.abs(t_act) > _SERIES_TOL * np.abs(total[pos])
            if not keep.all():
                pos = pos[keep]
                t_act = t_act[keep]
                w_act = w_act[keep]
        out[idx] = np.exp(lg - z * np.log(ws)) - np.exp(-ws) * total

    if np.any(large):
        idx = np.nonzero(large)[0]
        x = flat[idx]
        # Legendre continued fraction by the modified Lentz scheme:
        # Gamma(z,w) = exp(-w) w^z / (b0 + K_j(a_j / b_j)),
        # b0 = w + 1 - z, a_j = -j (j - z), b_j = b_(j-1) + 2.
        f = (x + 1.0 - z).astype(np.complex128)
        f[np.abs(f) < _LENTZ_TINY] = _LENTZ_TINY
        pos = np.arange(idx.size)
        b_act = f.copy()
        c_act = f.copy()
        d_act = np.zeros(idx.size, dtype=np.complex128)
        j = 0
        while pos.size:
            j += 1
            if j > _MAX_ITER:
                raise AccuracyError("kernel continued fraction failed to converge")
            a_j = -j * (j - z)
            b_act = b_act + 2.0
            d_act = b_act + a_j * d_act
            d_act[np.abs(d_act) < _LENTZ_TINY] = _LENTZ_TINY
            c_act = b_act + a_j / c_act
            c_act[np.abs(c_act) < _LENTZ_TINY] = _LENTZ_TINY
            d_act = 1.0 / d_act
            delta = c_act * d_act
            f[pos] *= delta
            keep = np.abs(delta - 1.0) > _LENTZ_TOL
            if not keep.all():
                pos = pos[keep]
                b_act = b_act[keep]
                c_act = c_act[keep]
                d_act = d_act[keep]
        out[idx] = np.exp(-x) / f

    return out.reshape(w.shape)


def g_kernel(z: complex, w: float) -> complex:
    """G_z(w) for a single positive w."""
    if not (isinstance(w, (int, float)) and math.isfinite(w) and w > 0):
        raise DomainError("g_kernel requires finite w > 0")
    return complex(_g_kernel_arr(z, np.array([float(w)]))[0])


def incomplete_gamma_upper(z: complex, w: float) -> complex:
    """Upper incomplete gamma Gamma(z, w) = w^z G_z(w), w > 0."""
    if not (isinstance(w, (int, float)) and math.isfinite(w) and w > 0):
        raise DomainError("incomplete_gamma_upper requires finite w > 0")
    z = complex(z)
    g = g_kernel(z, w)
    if g == 0.0:
        return 0.0 + 0.0j
    return complex(np.exp(z * np.log(w)) * g)


@dataclass(eq=False)
class GDerivativeRow:
    """Derivatives d^r/dw^r G_z(w) for r = 0 .. R-1 at one (z, w).

    values[r] = (-1)^r G_(z+r)(w), so |values[r]| <= r! / w^(r+1).
    """

    z: complex
    w: float
    values: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.values)


def _g_rows_arr(z: complex, w: np.ndarray, R: int) -> np.ndarray:
    """(R, len(w)) array with row r = G_(z+r) at every w, by upward recursion.

    G_(z+1)(w) = (exp(-w) + z G_z(w)) / w; the recursion tracks the growth of
    G itself (both scale like (z+r)/w per step), so relative error is stable.
    """
    w = np.asarray(w, dtype=np.float64)
    rows = np.empty((R, w.size), dtype=np.complex128)
    rows[0] = _g_kernel_arr(z, w)
    if R > 1:
        ew = np.exp(-w)
        for r in range(1, R):
            rows[r] = (ew + (z + (r - 1)) * rows[r - 1]) / w
    return rows


def g_derivative_row(z: complex, w: float, R: int) -> GDerivativeRow:
    """All derivatives G^(r)_z(w), r < R, via the upward recursion."""
    if not (isinstance(w, (int, float)) and math.isfinite(w) and w > 0):
        raise DomainError("g_derivative_row requires finite w > 0")
    if not (isinstance(R, (int, np.integer)) and R >= 1):
        raise DomainError("g_derivative_row requires R >= 1")
    z = complex(z)
    rows = _g_rows_arr(z, np.array([float(w)]), int(R))[:, 0]
    signs = np.where(np.arange(int(R)) % 2 == 0, 1.0, -1.0)
    return GDerivativeRow(z=z, w=float(w), values=rows * signs)


def weight_v(z: complex, w: float) -> complex:
    """Smoothing weight V_z(w) = Gamma(z/2, w) / Gamma(z/2)."""
    z = complex(z)
    return complex(incomplete_gamma_upper(z / 2.0, w) * np.exp(-sc.loggamma(z / 2.0)))


def theta_phase(t: float, parity: int, q: float) -> float:
    """Rotation phase theta(t, parity) for conductor q.

    theta = (t/2) log(q/pi) + Im log Gamma((1/2 + parity + i t)/2).  Exact
    for any t; accuracy degrades slowly for |t| >> 1 (no large-t
    reformulation here, callers warn past |t| = 1).
    """
    if parity not in (0, 1):
        raise DomainError("parity must be 0 or 1")
    if not q >= 1:
        raise DomainError("theta_phase requires q >= 1")
    t = float(t)
    lg = sc.loggamma((0.5 + parity + 1j * t) / 2.0)
    return (t / 2.0) * math.log(q / math.pi) + float(lg.imag)


def c_prefactor(t: float, q: float) -> complex:
    """C(t, q) = (pi/q)^(1/4 + it/2) / Gamma(1/4 + it/2)."""
    if not q >= 1:
        raise DomainError("c_prefactor requires q >= 1")
    zq = 0.25 + 0.5j * float(t)
    return complex(np.exp(zq * np.log(math.pi / q) - sc.loggamma(zq)))


def g_prefactor(q: int) -> complex:
    """g(q) = exp(pi i q(q-2)/8 - pi i/8) / (2 sqrt 2), q odd.

    The exponent is reduced mod 16 in exact integer arithmetic first, so the
    value depends only on q mod 16 with no large-angle error.
    """
    q = int(q)
    if q % 2 == 0:
        raise DomainError("g_prefactor requires odd q")
    phase16 = (q * (q - 2) - 1) % 16
    return complex(np.exp(1j * math.pi * phase16 / 8.0) / _TWO_SQRT_TWO)
