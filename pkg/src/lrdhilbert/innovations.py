"""Gaussian innovations on the grid.

Innovation ``k`` of replication ``rep`` is generated from a Philox stream
keyed by ``(base_seed, rep)`` whose counter starts at a block derived from
``k``.  Any innovation can therefore be produced on its own, in any order or
in any batch, with bit-identical values.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from scipy.linalg import lapack

from .errors import ConfigError, DimensionError, ModelError
from .grid import GridMeasure

__all__ = [
    "CovarianceKernel",
    "InnovationSampler",
    "build_sampler",
    "sample",
    "empirical_covariance",
    "covariance_standard_errors",
    "kernel_from_spec",
    "pivoted_factor",
]

_HERM_TOL = 1e-12
_PSD_RTOL = 1e-10
_FACTOR_TOL = 1e-10
_COUNTER_OFFSET = 1 << 127  # keeps counters non-negative for k <= 0


class CovarianceKernel:
    """Hermitian PSD matrix ``sigma(r, s) = E eps(r) conj(eps(s))``."""

    def __init__(self, sigma):
        sigma = np.array(sigma, dtype=complex)
        if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
            raise DimensionError("sigma must be a square matrix")
        scale = max(1.0, float(np.max(np.abs(sigma))) if sigma.size else 1.0)
        herm = float(np.max(np.abs(sigma - sigma.conj().T)))
        if herm > _HERM_TOL * scale:
            raise ModelError(f"sigma is not Hermitian (defect {herm:.2e})")
        sigma = 0.5 * (sigma + sigma.conj().T)
        eig = np.linalg.eigvalsh(sigma)
        if eig[0] < -_PSD_RTOL * max(eig[-1], 0.0) - 1e-300:
            raise ModelError(
                f"sigma is not positive semi-definite (eigenvalues in [{eig[0]:.3e}, {eig[-1]:.3e}])"
            )
        sigma.setflags(write=False)
        self._sigma = sigma
        diag = sigma.diagonal().real.copy()
        diag.setflags(write=False)
        self._diag = diag

    @classmethod
    def identity(cls, m):
        return cls(np.eye(m))

    @classmethod
    def scaled_identity(cls, m, v):
        return cls(float(v) * np.eye(m))

    @classmethod
    def squared_exponential(cls, points, lengthscale, variance=1.0):
        x = np.asarray(points, dtype=float)
        diff = x[:, None] - x[None, :]
        return cls(variance * np.exp(-(diff**2) / lengthscale**2))

    @property
    def sigma(self) -> np.ndarray:
        return self._sigma

    @property
    def diag(self) -> np.ndarray:
        """``sigma^2(s) = E |eps(s)|^2``."""
        return self._diag

    @property
    def size(self) -> int:
        return self._sigma.shape[0]

    @property
    def is_real(self) -> bool:
        return bool(np.max(np.abs(self._sigma.imag), initial=0.0) < _HERM_TOL)

    def __repr__(self):
        return f"CovarianceKernel(size={self.size}, trace={self._diag.sum():.6g})"


def pivoted_factor(sigma, tol=_FACTOR_TOL) -> np.ndarray:
    """Rank-revealing Cholesky: ``F`` (m x rank) with ``F F* = sigma``.

    Raises :class:`ModelError` if the reconstruction misses ``sigma`` by more
    than ``tol * max(1, max|sigma|)`` in max-entry norm (e.g. an indefinite
    matrix).
    """
    sigma = np.asarray(sigma)
    m = sigma.shape[0]
    if not np.any(sigma):
        return np.zeros((m, 0), dtype=sigma.dtype)
    if np.iscomplexobj(sigma):
        c, piv, rank, info = lapack.zpstrf(sigma, lower=1, tol=-1.0)
    else:
        c, piv, rank, info = lapack.dpstrf(sigma, lower=1, tol=-1.0)
    if info < 0:
        raise ModelError(f"pivoted Cholesky failed (info={info})")
    L = np.tril(c)[:, :rank]
    F = np.empty_like(L)
    F[piv - 1, :] = L
    err = float(np.max(np.abs(F @ F.conj().T - sigma)))
    if err > tol * max(1.0, float(np.max(np.abs(sigma)))):
        raise ModelError(f"kernel factorization error {err:.2e} exceeds {tol:g}; kernel not PSD?")
    return F


class InnovationSampler:
    """Reproducible iid Gaussian innovations with covariance ``sigma``.

    ``mode`` is ``"real"`` (real Gaussian, needs a real kernel) or
    ``"complex"`` (circular complex Gaussian: ``E eps eps^T = 0``).
    """

    def __init__(self, kernel: CovarianceKernel, mode: str = "real", base_seed: int = 0):
        if mode not in ("real", "complex"):
            raise ValueError(f"mode must be 'real' or 'complex', got {mode!r}")
        if mode == "real" and not kernel.is_real:
            raise ModelError("real-mode sampling needs a real symmetric kernel")
        sigma = kernel.sigma.real if mode == "real" else kernel.sigma
        self.kernel = kernel
        self.mode = mode
        self.base_seed = int(base_seed)
        factor = pivoted_factor(np.ascontiguousarray(sigma))
        factor.setflags(write=False)
        self.factor = factor
        rank = factor.shape[1]
        self._n_normals = rank if mode == "real" else 2 * rank
        self._n_uniforms = self._n_normals + (self._n_normals & 1)
        self._blocks = max(1, -(-self._n_uniforms // 4))  # Philox4x64 counter steps
        self._keys = {}

    @property
    def size(self) -> int:
        return self.factor.shape[0]

    @property
    def rank(self) -> int:
        return self.factor.shape[1]

    def _key(self, replication):
        key = self._keys.get(replication)
        if key is None:
            key = np.random.SeedSequence([self.base_seed, int(replication)]).generate_state(
                2, np.uint64
            )
            self._keys[replication] = key
        return key

    def standard_normals(self, start: int, count: int, replication: int = 0) -> np.ndarray:
        """Standard normals behind innovations ``start .. start+count-1``, shape (count, q)."""
        if count < 0:
            raise ValueError("count must be >= 0")
        q = self._n_normals
        if count == 0 or q == 0:
            return np.zeros((count, q))
        width = 4 * self._blocks
        counter = (int(start) + _COUNTER_OFFSET) * self._blocks
        bitgen = np.random.Philox(key=self._key(replication), counter=counter)
        raw = bitgen.random_raw(count * width).reshape(count, width)[:, : self._n_uniforms]
        u = (raw >> np.uint64(11)).astype(float) * (1.0 / 9007199254740992.0)
        u1 = 1.0 - u[:, 0::2]  # in (0, 1]
        u2 = u[:, 1::2]
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        z = np.empty((count, self._n_uniforms))
        z[:, 0::2] = radius * np.cos(angle)
        z[:, 1::2] = radius * np.sin(angle)
        return z[:, :q]

    def sample_block(self, start: int, count: int, replication: int = 0) -> np.ndarray:
        """Innovations ``eps_start .. eps_{start+count-1}`` as a (count, m) array."""
        z = self.standard_normals(start, count, replication)
        r = self.rank
        if r == 0:
            dtype = float if self.mode == "real" else complex
            return np.zeros((count, self.size), dtype=dtype)
        if self.mode == "real":
            return _combine(z, self.factor.real)
        w = (z[:, :r] + 1j * z[:, r:]) * np.sqrt(0.5)
        return _combine(w, self.factor)

    def sample(self, k: int, replication: int = 0) -> np.ndarray:
        """The ``k``-th innovation as a grid function."""
        return self.sample_block(k, 1, replication)[0]


def _combine(w, F):
    """``w @ F.T`` summed in a fixed order.

    A BLAS product may round differently depending on how many rows it gets;
    accumulating column by column keeps every innovation bit-identical
    whatever batch it is generated in.
    """
    out = np.zeros((w.shape[0], F.shape[0]), dtype=np.result_type(w, F))
    for c in range(F.shape[1]):
        out += w[:, c : c + 1] * F[:, c]
    return out


def build_sampler(kernel: CovarianceKernel, mode: str = "real", base_seed: int = 0) -> InnovationSampler:
    return InnovationSampler(kernel, mode=mode, base_seed=base_seed)


def sample(sampler: InnovationSampler, k: int, replication: int = 0) -> np.ndarray:
    return sampler.sample(k, replication)


def empirical_covariance(draws) -> np.ndarray:
    """Mean-zero estimator ``(1/R) sum_k x_k x_k*`` over the rows of ``draws``."""
    x = np.asarray(draws)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("need a non-empty (R, m) array of draws")
    R = x.shape[0]
    cov = x.T @ x.conj() / R
    return 0.5 * (cov + cov.conj().T)


def covariance_standard_errors(draws) -> np.ndarray:
    """Entrywise Monte Carlo standard error of :func:`empirical_covariance`.

    For entry (r, s) this is ``sqrt(mean |p - mean p|^2 / R)`` with
    ``p = x(r) conj x(s)`` taken over the draws.
    """
    x = np.asarray(draws)
    R = x.shape[0]
    if R < 2:
        raise ValueError("need at least two draws")
    mean = x.T @ x.conj() / R
    second = (np.abs(x) ** 2).T @ (np.abs(x) ** 2) / R
    var = np.maximum(second - np.abs(mean) ** 2, 0.0)
    return np.sqrt(var / (R - 1))


def kernel_from_spec(spec, grid: GridMeasure, base_dir: Path | None = None) -> CovarianceKernel:
    """Kernel from a config value.

    ``"identity"``, ``{"scaled-identity": v}``,
    ``{"squared-exponential": {"lengthscale": l, "variance": v}}`` or
    ``{"matrix-file": path}`` (CSV, one row per grid point, columns
    ``re_0, im_0, re_1, im_1, ...``).
    """
    m = grid.size
    if isinstance(spec, CovarianceKernel):
        return spec
    try:
        if spec == "identity":
            return CovarianceKernel.identity(m)
        if isinstance(spec, dict) and len(spec) == 1:
            (kind, value), = spec.items()
            if kind == "identity":
                return CovarianceKernel.identity(m)
            if kind == "scaled-identity":
                return CovarianceKernel.scaled_identity(m, float(value))
            if kind == "squared-exponential":
                ell = float(value["lengthscale"])
                var = float(value.get("variance", 1.0))
                if not ell > 0 or not var >= 0:
                    raise ConfigError("squared-exponential needs lengthscale > 0 and variance >= 0")
                if grid.points.dtype == object:
                    raise ConfigError("squared-exponential kernel needs numeric grid points")
                return CovarianceKernel.squared_exponential(grid.points, ell, var)
            if kind == "matrix-file":
                path = Path(value)
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                return CovarianceKernel(read_matrix_csv(path, m))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad kernel spec {spec!r}: {exc}") from None
    raise ConfigError(f"unknown kernel spec {spec!r}")


def read_matrix_csv(path: Path, m: int) -> np.ndarray:
    if not path.exists():
        raise ConfigError(f"kernel matrix file not found: {path}")
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
            if len(vals) != 2 * m:
                raise ConfigError(f"{path}:{lineno}: expected {2 * m} columns, got {len(vals)}")
            rows.append(np.array(vals[0::2]) + 1j * np.array(vals[1::2]))
    if len(rows) != m:
        raise ConfigError(f"{path}: expected {m} rows, got {len(rows)}")
    return np.array(rows)
