"""Closed-form limit covariances of the normalized partial sums.

Conventions: ``d(r,s) = d(r) + conj(d(s))`` and ``c(r,s) = Beta(1 - d(r), d(r,s) - 1)``.
Admissibility (``1/2 < h < 1`` on the grid) keeps ``Re(2 - d(r,s))`` in
``(0, 1)`` and ``Re(3 - d(r,s))`` in ``(1, 2)``, so no denominator can vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grid import GridMeasure
from .innovations import CovarianceKernel
from .operators import (
    MultiplicationSymbol,
    NormalOperatorSpec,
    conjugate_kernel_by_unitary,
    require_admissible,
)
from .specfun import limit_constant_c

__all__ = [
    "LimitCovariance",
    "HermitianPSDReport",
    "limit_constant_matrix",
    "clt_limit_covariance",
    "clt_covariance_operator",
    "piecewise_C",
    "fclt_V",
    "fclt_V_gram",
    "check_hermitian_psd",
    "selfsim_residual",
    "pathnorm_exact_and_bound",
    "continuity_fourth_moment_bound",
    "increment_covariance",
    "increment_second_moment",
    "increment_fourth_moment",
]


@dataclass
class LimitCovariance:
    """An evaluated limit covariance plus what it was computed from.

    ``kind="clt-kernel"``: ``data`` is the m x m matrix of ``E G(r) conj G(s)``.
    ``kind="fclt-samples"``: ``data`` is a list of ``(r, s, t, u, value)``.
    """

    kind: str
    data: object
    provenance: dict = field(default_factory=dict)


def _powc(x, expo):
    """``x ** expo`` for real ``x >= 0`` and complex ``expo`` with positive real part (``0 -> 0``)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        logx = np.log(np.where(x > 0, x, 1.0))
    return np.where(x > 0, np.exp(expo * logx), 0.0)


def limit_constant_matrix(symbol: MultiplicationSymbol) -> np.ndarray:
    """``c(r, s)`` for all grid pairs."""
    d = symbol.d
    return limit_constant_c(d[:, None], d[None, :])


def clt_limit_covariance(symbol: MultiplicationSymbol, kernel: CovarianceKernel) -> np.ndarray:
    """``E G(r) conj G(s) = (c(r,s) + conj c(s,r)) / ((2 - d(r,s)) (3 - d(r,s))) sigma(r,s)``."""
    require_admissible(symbol)
    d = symbol.d
    d_rs = d[:, None] + np.conj(d)[None, :]
    c = limit_constant_matrix(symbol)
    out = (c + np.conj(c.T)) / ((2.0 - d_rs) * (3.0 - d_rs)) * kernel.sigma
    return 0.5 * (out + out.conj().T)


def clt_covariance_operator(spec: NormalOperatorSpec, kernel: CovarianceKernel, grid: GridMeasure) -> np.ndarray:
    """Matrix of ``C_G = U* (kernel integral against E G(r) conj G(s)) U``."""
    cov = clt_limit_covariance(spec.symbol, kernel)
    return conjugate_kernel_by_unitary(spec.unitary, cov, grid)


def piecewise_C(d_r, d_s, t: float) -> complex:
    """``c(r,s)`` for ``t < 0``, ``conj c(s,r)`` for ``t > 0`` and 0 at ``t = 0``.

    The value at ``t = 0`` only ever multiplies ``|t - u|^(3 - d(r,s)) = 0``.
    """
    if t < 0:
        return complex(limit_constant_c(d_r, d_s))
    if t > 0:
        return complex(np.conj(limit_constant_c(d_s, d_r)))
    return 0j


def _v_core(d_r, d_s, sig, t, u):
    """Vectorised ``V`` for broadcastable arrays of symbol values and times."""
    d_rs = d_r + np.conj(d_s)
    c_rs = limit_constant_c(d_r, d_s)
    c_sr_bar = np.conj(limit_constant_c(d_s, d_r))
    expo = 3.0 - d_rs
    diff = np.asarray(t, dtype=float) - np.asarray(u, dtype=float)
    C = np.where(diff < 0, c_rs, np.where(diff > 0, c_sr_bar, 0.0))
    bracket = c_sr_bar * _powc(t, expo) + c_rs * _powc(u, expo) - C * _powc(np.abs(diff), expo)
    return sig / ((3.0 - d_rs) * (2.0 - d_rs)) * bracket


def fclt_V(symbol: MultiplicationSymbol, kernel: CovarianceKernel, r_idx, s_idx, t, u):
    """Covariance ``V((r,t),(s,u)) = E G(r,t) conj G(s,u)`` of the limit process.

    Index and time arguments broadcast; scalars give a Python complex.
    """
    require_admissible(symbol)
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(t < 0) or np.any(u < 0):
        raise DomainError("times must be >= 0")
    r_idx = np.asarray(r_idx)
    s_idx = np.asarray(s_idx)
    d = symbol.d
    out = _v_core(d[r_idx], d[s_idx], kernel.sigma[r_idx, s_idx], t, u)
    return complex(out) if np.ndim(out) == 0 else out


def fclt_V_gram(symbol, kernel, points, times) -> np.ndarray:
    """Gram matrix of ``V`` over all ``(point, time)`` pairs, point-major order."""
    points = np.asarray(points, dtype=int)
    times = np.asarray(times, dtype=float)
    P = np.repeat(points, times.size)
    T = np.tile(times, points.size)
    return fclt_V(symbol, kernel, P[:, None], P[None, :], T[:, None], T[None, :])


@dataclass
class HermitianPSDReport:
    min_eig: float
    max_eig: float
    hermitian_defect: float
    passed: bool


def check_hermitian_psd(gram, herm_tol: float = 1e-10, psd_rtol: float = 1e-8) -> HermitianPSDReport:
    """Hermitian defect and eigenvalue range of a covariance Gram matrix."""
    G = np.atleast_2d(np.asarray(gram, dtype=complex))
    defect = float(np.max(np.abs(G - G.conj().T)))
    eig = np.linalg.eigvalsh(0.5 * (G + G.conj().T))
    lo, hi = float(eig[0]), float(eig[-1])
    passed = defect < herm_tol and lo >= -psd_rtol * max(hi, 0.0)
    return HermitianPSDReport(lo, hi, defect, bool(passed))


def selfsim_residual(symbol, kernel, a: float, pairs) -> float:
    """``max |V((r,at),(s,au)) - a^(3/2-d(r)) conj(a^(3/2-d(s))) V((r,t),(s,u))|``.

    ``pairs`` is an iterable of ``(r, s, t, u)``.
    """
    if not a > 0:
        raise DomainError("a must be positive")
    pairs = np.asarray(list(pairs), dtype=float)
    if pairs.size == 0:
        return 0.0
    r = pairs[:, 0].astype(int)
    s = pairs[:, 1].astype(int)
    t = pairs[:, 2]
    u = pairs[:, 3]
    d = symbol.d
    la = math.log(a)
    scale = np.exp((1.5 - d[r]) * la) * np.conj(np.exp((1.5 - d[s]) * la))
    lhs = fclt_V(symbol, kernel, r, s, a * t, a * u)
    rhs = scale * fclt_V(symbol, kernel, r, s, t, u)
    return float(np.max(np.abs(lhs - rhs)))


def _bound_integrand(symbol, sigma_diag):
    h = symbol.h
    s2 = np.asarray(sigma_diag, dtype=float)
    return s2 / (1.0 - h) ** 2 + s2 / ((1.0 - h) * (2.0 * h - 1.0))


def _weights(grid, m):
    return np.ones(m) if grid is None else grid.weights


def pathnorm_exact_and_bound(symbol, sigma_diag, grid: GridMeasure | None, t: float) -> tuple[float, float]:
    """``E int |G(v,t)|^2 mu(dv)`` and its ``max{t, t^2}`` bound."""
    require_admissible(symbol)
    if t < 0:
        raise DomainError("t must be >= 0")
    h = symbol.h
    s2 = np.asarray(sigma_diag, dtype=float)
    w = _weights(grid, symbol.size)
    c = limit_constant_c(symbol.d, symbol.d)
    integrand = s2 * (2.0 * c.real) / (2.0 * (1.0 - h) * (3.0 - 2.0 * h)) * _powc(t, 3.0 - 2.0 * h).real
    exact = float(np.sum(w * integrand))
    bound = max(t, t * t) * float(np.sum(w * _bound_integrand(symbol, s2)))
    return exact, bound


GAUSSIAN_K4 = 3.0


def continuity_fourth_moment_bound(symbol, sigma_diag, grid: GridMeasure | None, t: float, u: float) -> float:
    """``K^4 (int [sigma^2/(1-h)^2 + sigma^2/((1-h)(2h-1))] mu)^2 |t-u|^2`` with ``K^4 = 3``."""
    require_admissible(symbol)
    if not (0 <= t <= 1 and 0 <= u <= 1):
        raise DomainError("t and u must lie in [0, 1]")
    w = _weights(grid, symbol.size)
    B = float(np.sum(w * _bound_integrand(symbol, sigma_diag)))
    return GAUSSIAN_K4 * B * B * (t - u) ** 2


def increment_covariance(symbol, kernel, t: float, u: float) -> np.ndarray:
    """``E (G(r,t) - G(r,u)) conj(G(s,t) - G(s,u))`` for all grid pairs."""
    m = symbol.size
    r = np.arange(m)[:, None]
    s = np.arange(m)[None, :]
    return (
        fclt_V(symbol, kernel, r, s, t, t)
        - fclt_V(symbol, kernel, r, s, t, u)
        - fclt_V(symbol, kernel, r, s, u, t)
        + fclt_V(symbol, kernel, r, s, u, u)
    )


def increment_second_moment(symbol, kernel, grid: GridMeasure | None, t: float, u: float) -> float:
    """``E ||G(., t) - G(., u)||^2``."""
    C = increment_covariance(symbol, kernel, t, u)
    return float(np.sum(_weights(grid, symbol.size) * C.diagonal().real))


def increment_fourth_moment(symbol, kernel, grid: GridMeasure | None, t: float, u: float, real: bool = True) -> float:
    """``E ||G(., t) - G(., u)||^4`` from Isserlis' theorem.

    ``real=True`` treats the increment as a real Gaussian vector
    (``(tr C)^2 + 2 ||C||^2``); ``real=False`` as circular complex
    (``(tr C)^2 + ||C||^2``), with traces and norms taken in the weighted space.
    """
    C = increment_covariance(symbol, kernel, t, u)
    w = _weights(grid, symbol.size)
    tr = float(np.sum(w * C.diagonal().real))
    frob = float(np.sum(np.outer(w, w) * np.abs(C) ** 2))
    return tr * tr + (2.0 if real else 1.0) * frob
