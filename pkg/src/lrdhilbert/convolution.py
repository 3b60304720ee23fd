"""Convolution operators on a truncated real line and their Fourier symbols.

The real line is replaced by ``[-L, L)`` sampled at ``x_j = -L + j dx``
(``dx = 2L/N``), so ``x = 0`` is the grid point ``j = N/2``.  The transform

    (F g)(s_k) = dx / sqrt(2 pi) * sum_j g(x_j) exp(-i s_k x_j),
    s_k = 2 pi * fftfreq(N, dx),

is the Riemann-sum approximation of the unitary continuous Fourier
transform.  Convolution is the matching circular convolution, for which
``F(K * f) = sqrt(2 pi) F(K) F(f)`` holds exactly on the grid.

A Dirac component ``delta/2`` never touches the grid: it contributes ``+1/2``
to the symbol and ``+f/2`` to the convolution.

On any finite frequency grid the symbol of ``exp(-a|x|) + delta/2`` stays
strictly above ``1/2``, whereas on the whole line ``h(s) -> 1/2`` as
``|s| -> inf``; the grid check is therefore stricter than the continuum one
only at the lower end.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, DomainError
from .grid import GridMeasure
from .operators import MultiplicationSymbol, check_admissible

__all__ = [
    "FourierGrid",
    "KernelSpec",
    "kernel_from_spec",
    "fourier_transform",
    "inverse_fourier_transform",
    "fourier_symbol",
    "exp_delta_symbol",
    "admissible_range",
    "apply_convolution",
    "symbol_admissible",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class FourierGrid:
    """Truncated line ``[-L, L)`` with ``N`` points (``N`` a power of two)."""

    L: float = 60.0
    N: int = 1 << 14

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        N = int(self.N)
        if N < 2 or N & (N - 1):
            raise ValueError(f"N must be a power of two >= 2, got {self.N}")
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def ds(self) -> float:
        return math.pi / self.L

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @property
    def s(self) -> np.ndarray:
        """Dual frequencies in FFT order, covering ``[-pi/dx, pi/dx)``."""
        return 2.0 * math.pi * np.fft.fftfreq(self.N, self.dx)

    def spectral_grid(self) -> GridMeasure:
        """The frequencies as a weighted grid (mass ``ds`` per point)."""
        return GridMeasure(self.s, np.full(self.N, self.ds))

    def _phase(self):
        # exp(-i s_k x_0) with x_0 = -L
        return np.exp(1j * self.s * self.L)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Convolution kernel: ``kind="tabulated"`` (values on the grid, plus an
    optional analytic Dirac mass ``delta``) or ``kind="exp-delta"``
    (``exp(-a|x|) + delta/2``)."""

    kind: str
    a: float | None = None
    values: np.ndarray | None = field(default=None, repr=False)
    delta: float = 0.0

    def __post_init__(self):
        if self.kind == "exp-delta":
            if self.a is None or not self.a > 0:
                raise DomainError("exp-delta kernel needs a > 0")
        elif self.kind == "tabulated":
            if self.values is None:
                raise ValueError("tabulated kernel needs values")
            vals = np.array(self.values, dtype=complex)
            if vals.ndim != 1:
                raise DimensionError("tabulated kernel must be 1-d")
            if not np.all(np.isfinite(vals)):
                raise ValueError("tabulated kernel is not summable (non-finite values)")
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)
        else:
            raise ValueError(f"unknown kernel kind {self.kind!r}")

    @classmethod
    def exp_delta(cls, a):
        return cls("exp-delta", a=float(a))

    @classmethod
    def tabulated(cls, values, delta=0.0):
        return cls("tabulated", values=values, delta=float(delta))

    @property
    def delta_weight(self) -> float:
        return 0.5 if self.kind == "exp-delta" else self.delta

    def grid_values(self, fgrid: FourierGrid) -> np.ndarray:
        """The regular (non-Dirac) part sampled on ``fgrid.x``."""
        if self.kind == "exp-delta":
            return np.exp(-self.a * np.abs(fgrid.x)).astype(complex)
        if self.values.size != fgrid.N:
            raise DimensionError(f"tabulated kernel has {self.values.size} values, grid has {fgrid.N}")
        return self.values


def kernel_from_spec(spec, fgrid: FourierGrid | None = None, base_dir: Path | None = None) -> KernelSpec:
    """Kernel from a config value.

    ``{"exp-delta": a}`` / ``{"exp-delta": {"a": a}}``, or
    ``{"tabulated": path}`` with a CSV of ``x, value`` rows that is linearly
    interpolated onto ``fgrid`` (zero outside the tabulated range).
    """
    if isinstance(spec, KernelSpec):
        return spec
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(f"convolution kernel spec must be a one-key mapping, got {spec!r}")
    (kind, value), = spec.items()
    if kind == "exp-delta":
        a = value.get("a") if isinstance(value, dict) else value
        try:
            a = float(a)
        except (TypeError, ValueError):
            raise ConfigError(f"exp-delta needs a numeric a, got {a!r}") from None
        if not a > 0:
            raise ConfigError(f"exp-delta needs a > 0, got {a}")
        return KernelSpec.exp_delta(a)
    if kind == "tabulated":
        if fgrid is None:
            raise ConfigError("tabulated kernel needs a Fourier grid")
        path = Path(value.get("path") if isinstance(value, dict) else value)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        xs, ks = _read_xy_csv(path)
        vals = np.interp(fgrid.x, xs, ks, left=0.0, right=0.0)
        return KernelSpec.tabulated(vals)
    raise ConfigError(f"unknown convolution kernel kind {kind!r}")


def _read_xy_csv(path: Path):
    if not path.exists():
        raise ConfigError(f"kernel table not found: {path}")
    xs, ks = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise ConfigError(f"{path}:{lineno}: expected 2 columns (x, value)")
            try:
                xs.append(float(row[0]))
                ks.append(float(row[1]))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    xs = np.asarray(xs)
    if xs.size < 2 or np.any(np.diff(xs) <= 0):
        raise ConfigError(f"{path}: need at least two rows with increasing x")
    return xs, np.asarray(ks)


def fourier_transform(f, fgrid: FourierGrid) -> np.ndarray:
    """``(F f)(s_k)`` for a function sampled on ``fgrid.x`` (FFT order)."""
    f = np.asarray(f)
    if f.shape[-1] != fgrid.N:
        raise DimensionError(f"function has {f.shape[-1]} samples, grid has {fgrid.N}")
    return fgrid.dx / _SQRT_2PI * fgrid._phase() * np.fft.fft(f, axis=-1)


def inverse_fourier_transform(F, fgrid: FourierGrid) -> np.ndarray:
    """Exact inverse of :func:`fourier_transform` on the grid."""
    F = np.asarray(F)
    if F.shape[-1] != fgrid.N:
        raise DimensionError(f"transform has {F.shape[-1]} samples, grid has {fgrid.N}")
    return np.fft.ifft(F * np.conj(fgrid._phase()), axis=-1) * (_SQRT_2PI / fgrid.dx)


def fourier_symbol(kernel: KernelSpec, fgrid: FourierGrid) -> MultiplicationSymbol:
    """``d(s_k) = sqrt(2 pi) (F K)(s_k)``, with ``+1/2`` for the Dirac part."""
    d = _SQRT_2PI * fourier_transform(kernel.grid_values(fgrid), fgrid) + kernel.delta_weight
    return MultiplicationSymbol(d)


def exp_delta_symbol(a, s):
    """``2a / (a^2 + s^2) + 1/2``, the symbol of ``exp(-a|x|) + delta/2``."""
    a = float(a)
    if not a > 0:
        raise DomainError("a must be positive")
    s = np.asarray(s, dtype=float)
    out = 2.0 * a / (a * a + s * s) + 0.5
    return float(out) if out.ndim == 0 else out


def admissible_range(a) -> bool:
    """True iff ``a > 4``, i.e. ``sup_s h(s) = 2/a + 1/2 < 1``."""
    a = float(a)
    if not a > 0:
        raise DomainError("a must be positive")
    return a > 4.0


def symbol_admissible(kernel: KernelSpec, fgrid: FourierGrid) -> bool:
    """Grid-level admissibility of the discretised symbol."""
    return check_admissible(fourier_symbol(kernel, fgrid))


def apply_convolution(kernel: KernelSpec, f, fgrid: FourierGrid) -> np.ndarray:
    """``(K * f)(x_i) = dx sum_j K(x_j) f(x_i - x_j)`` (circular), plus ``f/2`` for a Dirac part."""
    f = np.asarray(f)
    if f.shape[-1] != fgrid.N:
        raise DimensionError(f"function has {f.shape[-1]} samples, grid has {fgrid.N}")
    Kf = _SQRT_2PI * fourier_transform(kernel.grid_values(fgrid), fgrid)
    out = inverse_fourier_transform(Kf * fourier_transform(f, fgrid), fgrid)
    if kernel.delta_weight:
        out = out + kernel.delta_weight * f
    return out
