"""Normal operators in spectral form: multiplication symbols and unitaries.

A normal operator N is carried as ``U* D U`` where ``D`` multiplies by a
complex symbol ``d(s)`` on a :class:`~lrdhilbert.grid.GridMeasure`.  On a
finite grid every atom has positive mass, so the essential infimum and
supremum of ``h = Re d`` are the plain grid min and max.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, DomainError
from .grid import GridMeasure

__all__ = [
    "MultiplicationSymbol",
    "UnitarySpec",
    "NormalOperatorSpec",
    "apply_symbol_power",
    "operator_norm_power",
    "check_lrd",
    "check_admissible",
    "inadmissible_points",
    "normalization_power",
    "scaling_operator",
    "conjugate_kernel_by_unitary",
    "symbol_from_spec",
]


class MultiplicationSymbol:
    """Complex symbol ``d(s)`` sampled on the grid points.

    Parameters
    ----------
    d : array_like of complex
        Symbol values, one per grid point.
    """

    def __init__(self, d):
        d = np.array(np.atleast_1d(d), dtype=complex)
        if d.ndim != 1 or d.size == 0:
            raise DimensionError("symbol must be a non-empty 1-d array")
        if not np.all(np.isfinite(d)):
            raise ValueError("symbol values must be finite")
        d.setflags(write=False)
        self._d = d
        h = d.real.copy()
        h.setflags(write=False)
        self._h = h

    @classmethod
    def constant(cls, value, m: int) -> "MultiplicationSymbol":
        return cls(np.full(m, complex(value)))

    @property
    def d(self) -> np.ndarray:
        return self._d

    @property
    def h(self) -> np.ndarray:
        return self._h

    @property
    def h_min(self) -> float:
        return float(self._h.min())

    @property
    def h_bar(self) -> float:
        return float(self._h.max())

    @property
    def size(self) -> int:
        return self._d.size

    def __len__(self):
        return self.size

    @property
    def admissible(self) -> bool:
        return check_admissible(self)

    def negated(self) -> "MultiplicationSymbol":
        return MultiplicationSymbol(-self._d)

    def __repr__(self):
        return (
            f"MultiplicationSymbol(size={self.size}, h_min={self.h_min:.6g}, "
            f"h_bar={self.h_bar:.6g})"
        )


def _check_len(symbol: MultiplicationSymbol, f):
    f = np.asarray(f)
    if f.shape[-1:] != (symbol.size,):
        raise DimensionError(
            f"grid function length {f.shape[-1:] or ()} does not match symbol size {symbol.size}"
        )
    return f


def apply_symbol_power(symbol: MultiplicationSymbol, j: int, f):
    """``(j+1)^(-d(s)) f(s)``, i.e. the weight ``u_j`` in spectral form."""
    if j < 0:
        raise DomainError("j must be >= 0")
    f = _check_len(symbol, f)
    return np.exp(-symbol.d * np.log(j + 1.0)) * f


def operator_norm_power(symbol: MultiplicationSymbol, j: int) -> float:
    """``||(j+1)^(-D)||_op = (j+1)^(-h_min)``."""
    if j < 0:
        raise DomainError("j must be >= 0")
    return float((j + 1.0) ** (-symbol.h_min))


def check_lrd(symbol: MultiplicationSymbol) -> bool:
    """True iff ``sum_j ||(j+1)^(-D)||_op`` diverges, i.e. ``h_min <= 1``."""
    return symbol.h_min <= 1.0


def check_admissible(symbol: MultiplicationSymbol) -> bool:
    """True iff ``1/2 < h(s) < 1`` at every grid point."""
    h = symbol.h
    return bool(np.all((h > 0.5) & (h < 1.0)))


def inadmissible_points(symbol: MultiplicationSymbol) -> np.ndarray:
    """Indices of grid points where ``h(s)`` leaves ``(1/2, 1)``."""
    h = symbol.h
    return np.flatnonzero(~((h > 0.5) & (h < 1.0)))


def require_admissible(symbol: MultiplicationSymbol):
    bad = inadmissible_points(symbol)
    if bad.size:
        raise DomainError(
            "limit theory needs h(s) in (1/2, 1) at every grid point; violated at "
            f"indices {bad.tolist()[:20]} (h = {symbol.h[bad][:20].round(6).tolist()})"
        )


def normalization_power(symbol: MultiplicationSymbol, n: int, f):
    """``n^(-H) f`` in the spectral domain: ``n^(d(s) - 3/2) f(s)``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    f = _check_len(symbol, f)
    return np.exp((symbol.d - 1.5) * np.log(float(n))) * f


def scaling_operator(symbol: MultiplicationSymbol, a: float, f):
    """``a^H f`` in the spectral domain: ``a^(3/2 - d(s)) f(s)``."""
    if not a > 0:
        raise DomainError("a must be positive")
    f = _check_len(symbol, f)
    return np.exp((1.5 - symbol.d) * np.log(float(a))) * f


@dataclass(frozen=True, eq=False)
class UnitarySpec:
    """Unitary map from the physical space to the spectral grid.

    ``kind`` is ``"identity"``, ``"dft"`` (unitary discrete Fourier
    transform, ``norm="ortho"``) or ``"matrix"`` (explicit ``m x m`` matrix).
    """

    kind: str
    m: int
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("identity", "dft", "matrix"):
            raise ValueError(f"unknown unitary kind {self.kind!r}")
        if self.kind == "matrix":
            if self.matrix is None:
                raise ValueError("explicit unitary needs a matrix")
            mat = np.array(self.matrix, dtype=complex)
            if mat.shape != (self.m, self.m):
                raise DimensionError(f"unitary matrix must be {self.m}x{self.m}")
            defect = np.max(np.abs(mat.conj().T @ mat - np.eye(self.m)))
            if defect > 1e-10:
                raise ValueError(f"matrix is not unitary (defect {defect:.2e})")
            mat.setflags(write=False)
            object.__setattr__(self, "matrix", mat)

    @classmethod
    def identity(cls, m):
        return cls("identity", m)

    @classmethod
    def dft(cls, m):
        return cls("dft", m)

    @classmethod
    def from_matrix(cls, matrix):
        matrix = np.asarray(matrix)
        return cls("matrix", matrix.shape[0], matrix)

    def _check(self, x):
        x = np.asarray(x)
        if x.shape[-1:] != (self.m,):
            raise DimensionError(f"vector length {x.shape[-1:] or ()} != {self.m}")
        return x

    def apply(self, x):
        """``U x`` (acts on the last axis)."""
        x = self._check(x)
        if self.kind == "identity":
            return x.astype(complex)
        if self.kind == "dft":
            return np.fft.fft(x, axis=-1, norm="ortho")
        return x @ self.matrix.T

    def apply_adjoint(self, y):
        """``U* y`` (acts on the last axis)."""
        y = self._check(y)
        if self.kind == "identity":
            return y.astype(complex)
        if self.kind == "dft":
            return np.fft.ifft(y, axis=-1, norm="ortho")
        return y @ self.matrix.conj()

    def as_matrix(self) -> np.ndarray:
        return self.apply(np.eye(self.m)).T


@dataclass(frozen=True, eq=False)
class NormalOperatorSpec:
    """``N = U* D U`` with ``D`` multiplication by ``symbol``."""

    unitary: UnitarySpec
    symbol: MultiplicationSymbol

    def __post_init__(self):
        if self.unitary.m != self.symbol.size:
            raise DimensionError(
                f"unitary acts on dimension {self.unitary.m}, symbol has {self.symbol.size} points"
            )

    def apply(self, x):
        return self.unitary.apply_adjoint(self.symbol.d * self.unitary.apply(x))


def conjugate_kernel_by_unitary(U: UnitarySpec, K, grid: GridMeasure) -> np.ndarray:
    """Matrix of ``x -> U*( s -> sum_i K(s, s_i) (U x)(s_i) mu_i )``."""
    K = np.asarray(K, dtype=complex)
    m = grid.size
    if K.shape != (m, m):
        raise DimensionError(f"kernel must be {m}x{m}, got {K.shape}")
    if U.m != m:
        raise DimensionError(f"unitary dimension {U.m} != grid size {m}")
    Kw = K * grid.weights[None, :]
    if U.kind == "identity":
        return Kw
    Umat = U.as_matrix()
    return Umat.conj().T @ Kw @ Umat


def symbol_from_spec(spec, grid: GridMeasure, fgrid=None, base_dir=None) -> MultiplicationSymbol:
    """Build a symbol from a config mapping.

    ``{"constant": [re, im]}`` or ``{"constant": re}``, ``{"tabulated": [...]}``
    (complex values as ``[re, im]`` pairs or reals), or
    ``{"convolution": <kernel spec>}`` (needs a Fourier grid).
    """
    if isinstance(spec, MultiplicationSymbol):
        return spec
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(f"symbol spec must be a one-key mapping, got {spec!r}")
    (kind, value), = spec.items()
    if kind == "constant":
        return MultiplicationSymbol.constant(_parse_complex(value), grid.size)
    if kind == "tabulated":
        values = [_parse_complex(v) for v in value]
        if len(values) != grid.size:
            raise ConfigError(f"tabulated symbol has {len(values)} values, grid has {grid.size}")
        return MultiplicationSymbol(values)
    if kind == "convolution":
        from .convolution import fourier_symbol, kernel_from_spec

        if fgrid is None:
            raise ConfigError("convolution symbol needs a Fourier grid")
        return fourier_symbol(kernel_from_spec(value, fgrid, base_dir), fgrid)
    raise ConfigError(f"unknown symbol kind {kind!r}")


def _parse_complex(v) -> complex:
    try:
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise ValueError("complex value needs [re, im]")
            return complex(float(v[0]), float(v[1]))
        if isinstance(v, str):
            return complex(v.replace(" ", ""))
        return complex(float(v))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad complex value {v!r}: {exc}") from None
