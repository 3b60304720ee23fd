"""Spectral-domain simulation of the linear process and its exact second moments.

The simulated process is the moving average truncated at order ``M``::

    X_k(s) = sum_{j=0}^{M} (j+1)^(-d(s)) eps_{k-j}(s)

Two independent exact routes give its second moments:

* lag sums ``gamma_k`` (:func:`autocovariance_gamma`), assembled into partial
  sum covariances by lag counting; these accept any ``M`` including
  ``M=None`` (the untruncated process) because the power sums are evaluated
  as an exact head plus an analytic Euler-Maclaurin remainder;
* the coefficients ``a_nj`` (:func:`anj_coeff`), summed over the finite
  window of innovations that feed ``zeta_n``; this needs ``M`` finite.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve

from .errors import DimensionError, DomainError
from .grid import GridMeasure
from .innovations import CovarianceKernel, InnovationSampler
from .operators import MultiplicationSymbol, require_admissible
from .specfun import hurwitz_zeta_tail

__all__ = [
    "ProcessConfig",
    "PathEnsemble",
    "power_weights",
    "simulate_path",
    "simulate_ensemble",
    "map_replications",
    "truncation_tail_bound",
    "choose_truncation",
    "partial_sums",
    "zeta",
    "lag_power_sums",
    "autocovariance_gamma",
    "exact_Sn_covariance",
    "exact_cross_covariance",
    "exact_zeta_cross_cov",
    "anj_coeff",
    "anj_matrix",
    "bound_g",
    "normalize_covariance",
]

_DIRECT_CONV_LIMIT = 1 << 22


@dataclass(frozen=True, eq=False)
class ProcessConfig:
    """Ingredients of one simulated process.

    ``M`` is the truncation order of the moving average (``j = 0..M``).
    """

    symbol: MultiplicationSymbol
    kernel: CovarianceKernel
    n: int
    M: int
    mode: str = "real"
    seed: int = 0
    grid: GridMeasure | None = None
    sampler: InnovationSampler = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.M is None or self.M < 0:
            raise ValueError("simulation needs a finite truncation order M >= 0")
        if self.symbol.size != self.kernel.size:
            raise DimensionError(
                f"symbol has {self.symbol.size} points, kernel has {self.kernel.size}"
            )
        if self.grid is not None and self.grid.size != self.symbol.size:
            raise DimensionError("grid size does not match the symbol")
        object.__setattr__(
            self, "sampler", InnovationSampler(self.kernel, mode=self.mode, base_seed=self.seed)
        )

    @property
    def m(self) -> int:
        return self.symbol.size

    def tail_bound(self) -> float:
        return truncation_tail_bound(self.symbol, self.kernel.diag, self.M, self.grid)


@dataclass
class PathEnsemble:
    """Simulated spectral-domain paths.

    ``paths[r, k - 1]`` is ``X_k`` of replication ``r`` for ``k = 1..n+1``;
    the extra value ``X_{n+1}`` makes ``zeta_n`` defined on all of ``[0, 1]``.
    """

    paths: np.ndarray
    config: ProcessConfig
    replications: np.ndarray

    @property
    def n(self) -> int:
        return self.paths.shape[1] - 1


def power_weights(symbol: MultiplicationSymbol, M: int) -> np.ndarray:
    """``v_j(s) = (j+1)^(-d(s))`` for ``j = 0..M``, shape ``(M+1, m)``."""
    logs = np.log(np.arange(1, M + 2, dtype=float))
    return np.exp(-np.outer(logs, symbol.d))


def simulate_path(config: ProcessConfig, replication: int = 0) -> np.ndarray:
    """``X_1 .. X_{n+1}`` for one replication, shape ``(n+1, m)``.

    Consumes innovations ``eps_{1-M} .. eps_{n+1}``; the result depends only
    on ``(config.seed, replication)``.
    """
    n, M = config.n, config.M
    eps = config.sampler.sample_block(1 - M, n + M + 1, replication)
    v = power_weights(config.symbol, M)
    if (M + 1) * (n + 1) <= _DIRECT_CONV_LIMIT // max(config.m, 1):
        out = np.zeros((n + 1, config.m), dtype=complex)
        for j in range(M + 1):
            out += v[j] * eps[M - j : M - j + n + 1]
        return out
    return fftconvolve(eps, v, mode="valid", axes=0)


def map_replications(
    config: ProcessConfig,
    replications,
    fn: Callable[[np.ndarray, int], object],
    threads: int = 1,
) -> list:
    """Apply ``fn(path, replication)`` to each simulated replication.

    Results come back in replication order whatever ``threads`` is, so any
    reduction done by the caller is reproducible bit for bit.
    """
    reps = [int(r) for r in replications]

    def work(r):
        return fn(simulate_path(config, r), r)

    if threads <= 1 or len(reps) <= 1:
        return [work(r) for r in reps]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, reps))


def simulate_ensemble(config: ProcessConfig, R: int, threads: int = 1, first: int = 0) -> PathEnsemble:
    reps = np.arange(first, first + R)
    paths = map_replications(config, reps, lambda p, r: p, threads=threads)
    return PathEnsemble(np.stack(paths), config, reps)


def _weights_or_ones(grid, m):
    if grid is None:
        return np.ones(m)
    if grid.size != m:
        raise DimensionError("grid size does not match the symbol")
    return grid.weights


def truncation_tail_bound(symbol: MultiplicationSymbol, sigma_diag, M: int, grid: GridMeasure | None = None) -> float:
    """``int sigma^2(s) (M+1)^(1-2h(s)) / (2h(s)-1) mu(ds)``.

    Bounds the mean-square truncation error ``E||X_k - X_k^(M)||^2``.  Without
    a grid every point gets unit mass.
    """
    h = symbol.h
    if np.any(h <= 0.5):
        raise DomainError("tail bound needs h(s) > 1/2 everywhere")
    if M is None:
        return 0.0
    if M < 0:
        raise ValueError("M must be >= 0")
    sigma2 = np.asarray(sigma_diag, dtype=float)
    w = _weights_or_ones(grid, symbol.size)
    return float(np.sum(w * sigma2 * np.exp((1.0 - 2.0 * h) * math.log(M + 1.0)) / (2.0 * h - 1.0)))


def second_moment(symbol: MultiplicationSymbol, kernel: CovarianceKernel, grid: GridMeasure | None = None) -> float:
    """``E||X_0||^2 = int gamma_0(s, s) mu(ds)`` of the untruncated process."""
    w = _weights_or_ones(grid, symbol.size)
    tot = 0.0
    for i, dv in enumerate(symbol.d):
        if kernel.diag[i] == 0:
            continue
        lam = lag_power_sums(dv, np.conj(dv), 1, None)[0].real
        tot += w[i] * kernel.diag[i] * lam
    return float(tot)


def choose_truncation(
    symbol: MultiplicationSymbol,
    kernel: CovarianceKernel,
    rtol: float = 1e-6,
    grid: GridMeasure | None = None,
    max_log2: int = 62,
) -> tuple[int, bool]:
    """Smallest power of two ``M`` with tail bound ``<= rtol * E||X_0||^2``.

    Returns ``(M, met)``; when no ``M <= 2**max_log2`` qualifies the cap is
    returned with ``met=False``.
    """
    target = rtol * second_moment(symbol, kernel, grid)
    for e in range(0, max_log2 + 1):
        M = 1 << e
        if truncation_tail_bound(symbol, kernel.diag, M, grid) <= target:
            return M, True
    return 1 << max_log2, False


def partial_sums(path) -> np.ndarray:
    """Prefix sums ``S_1 .. S_n`` along the first axis."""
    path = np.asarray(path)
    if path.shape[0] == 0:
        raise ValueError("empty path")
    return np.cumsum(path, axis=0)


def zeta(path, extra, t: float) -> np.ndarray:
    """``zeta_n(t) = S_floor(nt) + {nt} X_{floor(nt)+1}``.

    ``path`` holds ``X_1 .. X_n`` and ``extra`` is ``X_{n+1}`` (it is only
    used when ``nt`` is not an integer, which cannot happen at ``t = 1``).
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError("t must lie in [0, 1]")
    path = np.asarray(path)
    n = path.shape[0]
    p, frac = _floor_frac(n, t)
    out = np.sum(path[:p], axis=0) if p > 0 else np.zeros(path.shape[1:], dtype=path.dtype)
    if frac > 0:
        nxt = path[p] if p < n else np.asarray(extra)
        out = out + frac * nxt
    return out


def _floor_frac(n: int, t: float) -> tuple[int, float]:
    nt = n * t
    p = int(math.floor(nt))
    frac = nt - p
    if frac < 1e-12 * max(1.0, nt):
        frac = 0.0
    elif 1.0 - frac < 1e-12 * max(1.0, nt):
        p, frac = p + 1, 0.0
    return p, frac


# ----------------------------------------------------------------------------
# Power sums  Lambda_k(a, b; M) = sum_{x=1}^{M+1-k} x^(-a) (x+k)^(-b)
# ----------------------------------------------------------------------------

_BINOM_TERMS = 24
_lag_cache: dict = {}


def _correlate(f, g, K):
    """``[sum_x f[x] g[x+k] for k < K]``; ``g`` must have length >= len(f) + K - 1."""
    nf = f.size
    if nf * K <= _DIRECT_CONV_LIMIT:
        windows = np.lib.stride_tricks.sliding_window_view(g[: nf + K - 1], nf)
        return windows @ f
    return fftconvolve(g[: nf + K - 1], f[::-1], mode="valid")


def _binomial_tail(a, b, ks, Y):
    """``sum_{x >= Y} x^(-a) (x+k)^(-b)`` by expanding ``(1 + k/x)^(-b)``."""
    ks = np.asarray(ks, dtype=float)
    Y = np.broadcast_to(np.asarray(Y, dtype=float), ks.shape)
    out = np.zeros(ks.shape, dtype=complex)
    coef = 1.0 + 0j
    kpow = np.ones_like(ks)
    for mm in range(_BINOM_TERMS):
        out = out + coef * kpow * hurwitz_zeta_tail(a + b + mm, Y)
        coef = coef * (-b - mm) / (mm + 1)
        kpow = kpow * ks
    return out


def lag_power_sums(a, b, n_lags: int, M: int | None = None) -> np.ndarray:
    """``Lambda_k = sum_{x=1}^{M+1-k} x^(-a) (x+k)^(-b)`` for ``k = 0..n_lags-1``.

    ``M=None`` sums to infinity (needs ``Re(a + b) > 1``).  Small ``M`` is
    summed exactly; otherwise the first ``X - 1`` terms are summed directly and
    the rest comes from a binomial expansion in ``k/x`` combined with
    Euler-Maclaurin tails of ``sum x^(-c)``; ``X >= 16 * n_lags`` keeps that
    expansion converging fast.
    """
    a = complex(a)
    b = complex(b)
    K = int(n_lags)
    if K < 1:
        raise ValueError("n_lags must be >= 1")
    key = (a, b, M)
    cached = _lag_cache.get(key)
    if cached is not None and cached.size >= K:
        return cached[:K]

    X = 1 << max(16, math.ceil(math.log2(16 * K)))
    if M is not None and M + 1 < X + K:
        L = M + 1
        x = np.arange(1, L + 1, dtype=float)
        f = np.exp(-a * np.log(x))
        g = np.concatenate([np.exp(-b * np.log(x)), np.zeros(K)])
        out = _correlate(f, g, min(K, L))
        if K > L:
            out = np.concatenate([out, np.zeros(K - L, dtype=complex)])
    else:
        if M is None and (a + b).real <= 1:
            raise DomainError("infinite lag sums need Re(a + b) > 1")
        x = np.arange(1, X, dtype=float)
        y = np.arange(1, X + K - 1, dtype=float)
        f = np.exp(-a * np.log(x))
        g = np.exp(-b * np.log(y))
        head = _correlate(f, g, K)
        ks = np.arange(K, dtype=float)
        out = head + _binomial_tail(a, b, ks, float(X))
        if M is not None:
            out = out - _binomial_tail(a, b, ks, (M + 2.0) - ks)
    out.setflags(write=False)
    if len(_lag_cache) > 256:
        _lag_cache.clear()
    _lag_cache[key] = out
    return out


def _lag_tables(symbol, kernel, n_lags, M):
    """Per-entry lag tables ``(forward, backward)``, each ``(n_lags, m, m)``.

    ``forward[k, r, s] = E X_0(r) conj X_k(s)`` and
    ``backward[k, r, s] = E X_k(r) conj X_0(s)``.
    """
    d = symbol.d
    m = d.size
    sigma = kernel.sigma
    fwd = np.zeros((n_lags, m, m), dtype=complex)
    bwd = np.zeros((n_lags, m, m), dtype=complex)
    for r in range(m):
        for s in range(m):
            if sigma[r, s] == 0:
                continue
            fwd[:, r, s] = sigma[r, s] * lag_power_sums(d[r], np.conj(d[s]), n_lags, M)
            bwd[:, r, s] = sigma[r, s] * lag_power_sums(np.conj(d[s]), d[r], n_lags, M)
    return fwd, bwd


def autocovariance_gamma(symbol: MultiplicationSymbol, kernel: CovarianceKernel, lag: int, M: int | None = None) -> np.ndarray:
    """``gamma_lag(r, s) = E X_0(r) conj X_lag(s)`` of the process truncated at ``M``.

    Equals ``sigma(r,s) sum_{j=0}^{M-lag} (j+1)^(-d(r)) (j+1+lag)^(-conj d(s))``;
    ``M=None`` gives the untruncated series.
    """
    if lag < 0:
        raise ValueError("lag must be >= 0")
    fwd, _ = _lag_tables(symbol, kernel, lag + 1, M)
    return fwd[lag]


def exact_Sn_covariance(symbol: MultiplicationSymbol, kernel: CovarianceKernel, n: int, M: int | None = None) -> np.ndarray:
    """``E S_n(r) conj S_n(s) = n gamma_0 + sum_{k=1}^{n-1} (n-k) [gamma_k(r,s) + conj gamma_k(s,r)]``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    fwd, bwd = _lag_tables(symbol, kernel, n, M)
    w = (n - np.arange(1, n, dtype=float))
    return n * fwd[0] + np.tensordot(w, fwd[1:] + bwd[1:], axes=(0, 0))


def _pair_counts(p, f, q, g):
    """Lag weights ``C(L) = sum_a w_a w'_{a+L}`` for ``L = -p .. q``.

    ``w`` is one on ``1..p`` plus ``f`` at ``p+1``; ``w'`` likewise with ``q, g``.
    """
    L = np.arange(-p, q + 1)
    lo = np.maximum(1, 1 - L)
    hi = np.minimum(p, q - L)
    C = np.maximum(hi - lo + 1, 0).astype(float)
    if g:
        b = q + 1 - L  # a = b - L with b = q+1
        C = C + g * ((b >= 1) & (b <= p))
    if f:
        b = p + 1 + L
        C = C + f * ((b >= 1) & (b <= q))
    if f and g:
        C = C + f * g * (L == q - p)
    return L, C


def exact_cross_covariance(symbol, kernel, n, t, u, M=None) -> np.ndarray:
    """``E zeta_n(r, t) conj zeta_n(s, u)`` from the lag tables (any ``M``)."""
    p, f = _floor_frac(n, t)
    q, g = _floor_frac(n, u)
    if not (0 <= t <= 1 and 0 <= u <= 1):
        raise DomainError("t and u must lie in [0, 1]")
    L, C = _pair_counts(p, f, q, g)
    n_lags = max(p, q) + 2
    fwd, bwd = _lag_tables(symbol, kernel, n_lags, M)
    pos = L >= 0
    out = np.tensordot(C[pos], fwd[L[pos]], axes=(0, 0))
    out = out + np.tensordot(C[~pos], bwd[-L[~pos]], axes=(0, 0))
    return out


def anj_matrix(symbol: MultiplicationSymbol, n: int, t: float, M: int, j_lo: int | None = None, j_hi: int | None = None):
    """``a_nj(s, t)`` for ``j = j_lo .. j_hi`` as a ``(J, m)`` array.

    ``a_nj(s,t) = sum_{k=1}^{floor(nt)} v_{k-j}(s) + {nt} v_{floor(nt)+1-j}(s)``
    with ``v_i = (i+1)^(-d)`` for ``0 <= i <= M`` and zero otherwise.
    Returns ``(js, A)``.
    """
    if M is None:
        raise DomainError("a_nj sums need a finite truncation order")
    if not 0.0 <= t <= 1.0:
        raise DomainError("t must lie in [0, 1]")
    p, frac = _floor_frac(n, t)
    if j_lo is None:
        j_lo = 1 - M
    if j_hi is None:
        j_hi = p + 1
    js = np.arange(j_lo, j_hi + 1)
    v = power_weights(symbol, M)
    W = np.zeros((M + 2, symbol.size), dtype=complex)
    np.cumsum(v, axis=0, out=W[1:])
    hi = np.clip(p - js + 1, 0, M + 1)
    lo = np.clip(1 - js, 0, M + 1)
    A = W[hi] - W[lo]
    if frac:
        idx = p + 1 - js
        ok = (idx >= 0) & (idx <= M)
        A[ok] += frac * v[idx[ok]]
    return js, A


def anj_coeff(symbol: MultiplicationSymbol, n: int, j: int, t: float, M: int) -> np.ndarray:
    """``a_nj(., t)`` for a single ``j``."""
    return anj_matrix(symbol, n, t, M, j, j)[1][0]


def exact_zeta_cross_cov(symbol, kernel, n, t, u, M=None, method: str = "auto") -> np.ndarray:
    """``E zeta_n(r, t) conj zeta_n(s, u)`` of the process truncated at ``M``.

    ``method="anj"`` sums ``sigma(r,s) a_nj(r,t) conj a_nj(s,u)`` over the
    innovation window; ``"gamma"`` counts lags against ``gamma_k``.  ``"auto"``
    uses the coefficient route when ``M`` is finite and moderate.
    """
    if method == "auto":
        method = "anj" if (M is not None and M + n <= (1 << 21)) else "gamma"
    if method == "gamma":
        return exact_cross_covariance(symbol, kernel, n, t, u, M)
    if method != "anj":
        raise ValueError(f"unknown method {method!r}")
    if not (0 <= t <= 1 and 0 <= u <= 1):
        raise DomainError("t and u must lie in [0, 1]")
    top = max(_floor_frac(n, t)[0], _floor_frac(n, u)[0]) + 1
    _, At = anj_matrix(symbol, n, t, M, 1 - M, top)
    _, Au = anj_matrix(symbol, n, u, M, 1 - M, top)
    return kernel.sigma * (At.T @ Au.conj())


def normalize_covariance(symbol: MultiplicationSymbol, cov, n: int) -> np.ndarray:
    """Entrywise ``n^(d(r,s) - 3) cov(r, s)``, i.e. the covariance of ``n^(-H)`` applied."""
    d = symbol.d
    d_rs = d[:, None] + np.conj(d)[None, :]
    return np.exp((d_rs - 3.0) * math.log(n)) * cov


def bound_g(symbol: MultiplicationSymbol, sigma_diag) -> np.ndarray:
    """Dominating function ``2 [sigma^2/(1-h)^2 + sigma^2/((1-h)(2h-1))]``."""
    require_admissible(symbol)
    h = symbol.h
    s2 = np.asarray(sigma_diag, dtype=float)
    return 2.0 * (s2 / (1.0 - h) ** 2 + s2 / ((1.0 - h) * (2.0 * h - 1.0)))
