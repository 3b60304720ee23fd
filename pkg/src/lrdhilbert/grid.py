"""Finite weighted grids standing in for L2(mu, C).

A grid function is a plain complex numpy array with one entry per grid point;
no wrapper class is used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError

__all__ = [
    "GridMeasure",
    "uniform_grid",
    "grid_from_spec",
    "as_grid_function",
    "inner_product",
    "norm",
    "integrate",
]


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Atoms ``points`` carrying positive masses ``weights``."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.atleast_1d(np.asarray(self.points))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if points.ndim != 1 or weights.ndim != 1:
            raise DimensionError("points and weights must be one-dimensional")
        if points.size < 1:
            raise DimensionError("a grid needs at least one point")
        if points.size != weights.size:
            raise DimensionError(
                f"{points.size} points but {weights.size} weights"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ValueError("grid weights must be finite and strictly positive")
        if np.unique(points).size != points.size:
            raise ValueError("grid points must be distinct")
        pdtype = float if np.issubdtype(points.dtype, np.number) else object
        object.__setattr__(self, "points", _frozen(points, pdtype))
        object.__setattr__(self, "weights", _frozen(weights, float))

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def __len__(self):
        return self.size

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def __repr__(self):
        return f"GridMeasure(size={self.size}, total_mass={self.total_mass:g})"


def uniform_grid(lo: float, hi: float, m: int) -> GridMeasure:
    """Midpoint grid on ``[lo, hi]`` with ``m`` cells of mass ``(hi - lo) / m``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not hi > lo:
        raise ValueError("need hi > lo")
    step = (hi - lo) / m
    points = lo + step * (np.arange(m) + 0.5)
    return GridMeasure(points, np.full(m, step))


def grid_from_spec(spec) -> GridMeasure:
    """Build a grid from a config mapping.

    Accepted forms::

        {"uniform": [lo, hi], "m": 8}
        {"points": [...], "weights": [...]}
    """
    if isinstance(spec, GridMeasure):
        return spec
    if not isinstance(spec, dict):
        raise ConfigError(f"grid spec must be a mapping, got {type(spec).__name__}")
    if "uniform" in spec:
        try:
            lo, hi = (float(v) for v in spec["uniform"])
            m = int(spec["m"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad uniform grid spec {spec!r}: {exc}") from None
        try:
            return uniform_grid(lo, hi, m)
        except ValueError as exc:
            raise ConfigError(f"bad uniform grid spec: {exc}") from None
    if "points" in spec:
        weights = spec.get("weights")
        if weights is None:
            raise ConfigError("explicit grid needs 'weights'")
        try:
            return GridMeasure(spec["points"], weights)
        except ValueError as exc:
            raise ConfigError(f"bad explicit grid: {exc}") from None
    raise ConfigError("grid spec needs either 'uniform' + 'm' or 'points' + 'weights'")


def as_grid_function(f, grid: GridMeasure) -> np.ndarray:
    f = np.asarray(f)
    if f.shape[-1:] != (grid.size,):
        raise DimensionError(
            f"grid function has trailing length {f.shape[-1:] or ()} "
            f"but the grid has {grid.size} points"
        )
    return f


def inner_product(f, g, grid: GridMeasure) -> complex:
    """``sum_i f_i conj(g_i) mu_i``."""
    f = as_grid_function(f, grid)
    g = as_grid_function(g, grid)
    return complex(np.sum(f * np.conj(g) * grid.weights))


def norm(f, grid: GridMeasure) -> float:
    f = as_grid_function(f, grid)
    return float(np.sqrt(np.sum(np.abs(f) ** 2 * grid.weights)))


def integrate(f, grid: GridMeasure) -> complex:
    """``sum_i f_i mu_i``."""
    f = as_grid_function(f, grid)
    return complex(np.sum(f * grid.weights))
