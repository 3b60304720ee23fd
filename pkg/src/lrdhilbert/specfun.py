"""Complex Gamma/Beta functions and the constants built from them.

Everything here is restricted to the right half-plane ``Re(z) > 0``, which is
all the limit formulas ever need, so no reflection formula is implemented.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

__all__ = [
    "log_gamma",
    "beta",
    "limit_constant_c",
    "limit_constant_c_gamma_form",
    "c_h",
    "c_h_bound",
    "gen_geom_sum",
    "hurwitz_zeta_tail",
]

# Lanczos approximation, g = 607/128, 15 coefficients (relative error ~1e-15
# on the right half-plane).
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_COEF = np.array([
    0.999999999999997092,
    57.1562356658629235,
    -59.5979603554754912,
    14.1360979747417471,
    -0.491913816097620199,
    0.339946499848118887e-4,
    0.465236289270485756e-4,
    -0.983744753048795646e-4,
    0.158088703224912494e-3,
    -0.210264441724104883e-3,
    0.217439618115212643e-3,
    -0.164318106536763890e-3,
    0.844182239838527433e-4,
    -0.261908384015814087e-4,
    0.368991826595316234e-5,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _require_right_half_plane(z, name="z"):
    re = np.real(z)
    if np.any(~np.isfinite(re)) or np.any(re <= 0):
        raise DomainError(f"{name} must have positive real part")


def log_gamma(z):
    """log Gamma(z) for ``Re(z) > 0``.

    Returns the branch that is continuous on the right half-plane and real on
    the positive axis (the same branch as ``scipy.special.loggamma``).
    Accepts scalars or arrays.
    """
    z = np.asarray(z, dtype=complex)
    _require_right_half_plane(z)
    # Lanczos is least accurate for tiny |z|; shift by one and recur back.
    small = np.real(z) < 0.5
    w = np.where(small, z + 1.0, z)
    ser = np.full(w.shape, _LANCZOS_COEF[0], dtype=complex)
    for j, c in enumerate(_LANCZOS_COEF[1:], start=1):
        ser = ser + c / (w + j)
    tmp = w + _LANCZOS_G + 0.5
    out = (w + 0.5) * np.log(tmp) - tmp + _HALF_LOG_2PI + np.log(ser / w)
    out = np.where(small, out - np.log(z), out)
    return out[()] if out.ndim == 0 else out


def beta(a, b):
    """Beta(a, b) = Gamma(a) Gamma(b) / Gamma(a + b) for ``Re(a), Re(b) > 0``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _require_right_half_plane(a, "a")
    _require_right_half_plane(b, "b")
    out = np.exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b))
    return out[()] if np.ndim(out) == 0 else out


def _require_memory_range(d, name):
    h = np.real(d)
    if np.any(~(h > 0.5)) or np.any(~(h < 1.0)):
        raise DomainError(f"Re({name}) must lie in (1/2, 1)")


def limit_constant_c(d_r, d_s):
    """c(r, s) = Beta(1 - d_r, d_r + conj(d_s) - 1).

    Equivalently ``int_0^inf x^(-d_r) (x + 1)^(-conj(d_s)) dx``.
    """
    d_r = np.asarray(d_r, dtype=complex)
    d_s = np.asarray(d_s, dtype=complex)
    _require_memory_range(d_r, "d_r")
    _require_memory_range(d_s, "d_s")
    return beta(1.0 - d_r, d_r + np.conj(d_s) - 1.0)


def limit_constant_c_gamma_form(d_r, d_s):
    """Same constant through Gamma(d(r,s) - 1) Beta(d_r, 1 - d_r) / (Gamma(d_r) Gamma(conj d_s)).

    Kept as an independent route for cross-checking ``limit_constant_c``.
    """
    d_r = np.asarray(d_r, dtype=complex)
    d_s = np.asarray(d_s, dtype=complex)
    _require_memory_range(d_r, "d_r")
    _require_memory_range(d_s, "d_s")
    d_rs = d_r + np.conj(d_s)
    out = np.exp(
        log_gamma(d_rs - 1.0)
        + np.log(beta(d_r, 1.0 - d_r))
        - log_gamma(d_r)
        - log_gamma(np.conj(d_s))
    )
    return out[()] if np.ndim(out) == 0 else out


def c_h(h):
    """``int_0^inf (x (x + 1))^(-h) dx = Beta(1 - h, 2h - 1)`` for real h in (1/2, 1)."""
    h = np.asarray(h, dtype=float)
    if np.any(~(h > 0.5)) or np.any(~(h < 1.0)):
        raise DomainError("h must lie in (1/2, 1)")
    out = np.real(beta(1.0 - h, 2.0 * h - 1.0))
    return float(out) if np.ndim(out) == 0 else out


def c_h_bound(h):
    """Upper bound 1/(1-h) + 1/(2h-1) for c_h(h)."""
    h = np.asarray(h, dtype=float)
    if np.any(~(h > 0.5)) or np.any(~(h < 1.0)):
        raise DomainError("h must lie in (1/2, 1)")
    out = 1.0 / (1.0 - h) + 1.0 / (2.0 * h - 1.0)
    return float(out) if np.ndim(out) == 0 else out


def gen_geom_sum(m1: int, m2: int, m3: int, x: float) -> float:
    """Closed form of ``sum_{j=m1}^{m2} (m3 - j) exp(-j x)``.

    With ``q = exp(-x)`` and ``K = m2 - m1 + 1``, telescoping ``(1 - q) S`` gives

        S = [(m3 - m1) q^m1 - (m3 - m2) q^(m2+1)] / (1 - q)
            - q^(m1+1) (1 - q^(K-1)) / (1 - q)^2,

    written with ``expm1`` so small ``x`` does not lose the denominators.
    """
    m1, m2, m3 = int(m1), int(m2), int(m3)
    if m1 > m2:
        raise ValueError(f"empty range: m1={m1} > m2={m2}")
    if not x > 0:
        raise DomainError("x must be positive")
    one_minus_q = -math.expm1(-x)
    first = ((m3 - m1) * math.exp(-m1 * x) - (m3 - m2) * math.exp(-(m2 + 1) * x)) / one_minus_q
    second = math.exp(-(m1 + 1) * x) * (-math.expm1(-(m2 - m1) * x)) / one_minus_q**2
    return first - second


# Bernoulli numbers B_2, B_4, B_6, B_8 for the Euler-Maclaurin tail.
_BERNOULLI_EVEN = (1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0)


def hurwitz_zeta_tail(c, y):
    """``sum_{x >= y} x^(-c)`` for large real ``y`` and ``Re(c) > 1``.

    Euler-Maclaurin expansion at ``y``; with ``y >= 1e3`` the omitted terms are
    below ``y^(-Re c - 8)``, i.e. far under double precision relative error.
    ``c`` and ``y`` broadcast.
    """
    c = np.asarray(c, dtype=complex)
    y = np.asarray(y, dtype=float)
    if np.any(np.real(c) <= 1):
        raise DomainError("tail sum needs Re(c) > 1")
    if np.any(y < 1000):
        raise DomainError("asymptotic tail needs y >= 1000")
    logy = np.log(y)
    out = np.exp((1.0 - c) * logy) / (c - 1.0) + 0.5 * np.exp(-c * logy)
    rising = c  # (c)_{2p-1}
    fact = 2.0  # (2p)!
    power = -c - 1.0
    for p, b2p in enumerate(_BERNOULLI_EVEN, start=1):
        out = out + b2p / fact * rising * np.exp(power * logy)
        rising = rising * (c + 2 * p - 1) * (c + 2 * p)
        fact *= (2 * p + 1) * (2 * p + 2)
        power = power - 2.0
    return out
