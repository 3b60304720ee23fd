"""Run configuration: YAML parsing and validation.

Validation collects every problem it finds and raises them together in one
:class:`~lrdhilbert.errors.ConfigError`, each message prefixed with the line
of the offending key where that is known.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .convolution import FourierGrid, KernelSpec, kernel_from_spec as conv_kernel_from_spec
from .errors import ConfigError
from .grid import GridMeasure, grid_from_spec
from .innovations import CovarianceKernel, kernel_from_spec
from .operators import (
    MultiplicationSymbol,
    UnitarySpec,
    inadmissible_points,
    symbol_from_spec,
)

__all__ = ["KINDS", "LIMIT_KINDS", "RunConfig", "parse_config", "load_config"]

KINDS = ("limits", "simulate", "verify-clt", "verify-fclt", "verify-selfsim", "verify-tightness", "symbol-check")
LIMIT_KINDS = ("limits", "verify-clt", "verify-fclt", "verify-selfsim", "verify-tightness")

DEFAULT_L = 60.0
DEFAULT_N = 1 << 14
DEFAULT_M_CAP = 1 << 14
DEFAULT_TAIL_RTOL = 1e-6

_KNOWN_KEYS = {
    "kind", "seed", "threads", "grid", "symbol", "kernel", "unitary", "mode", "fgrid",
    "n", "n_list", "times", "R", "R_gauss", "M", "M_cap", "tail_rtol", "a", "a_list",
    "gaps", "u", "projections", "out", "convolution",
}


@dataclass
class RunConfig:
    """A validated experiment description (one experiment per run)."""

    kind: str
    grid: GridMeasure | None = None
    symbol: MultiplicationSymbol | None = None
    kernel: CovarianceKernel | None = None
    unitary: UnitarySpec | None = None
    fgrid: FourierGrid = field(default_factory=FourierGrid)
    conv_kernel: KernelSpec | None = None
    mode: str = "real"
    n: int = 1024
    n_list: list = field(default_factory=lambda: [256, 1024, 4096])
    times: list = field(default_factory=lambda: [0.25, 0.5, 1.0])
    R: int = 2000
    R_gauss: int | None = None
    M: int | None = None  # None means choose automatically
    M_cap: int = DEFAULT_M_CAP
    tail_rtol: float = DEFAULT_TAIL_RTOL
    seed: int = 0
    threads: int = 1
    a: float = 0.5
    a_list: list = field(default_factory=lambda: [0.3, 1.0, 2.0, 7.5])
    gaps: list = field(default_factory=lambda: [1 / 8, 1 / 16, 1 / 32, 1 / 64])
    u: float = 0.25
    projections: np.ndarray | None = None
    out: Path | None = None
    source: Path | None = None
    raw: dict = field(default_factory=dict)


def _key_lines(text: str) -> dict:
    """Line numbers (1-based) of the top-level keys."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for k, _ in node.value:
            lines[k.value] = k.start_mark.line + 1
    return lines


class _Collector:
    def __init__(self, lines, source):
        self.lines = lines
        self.source = source
        self.errors = []

    def add(self, key, msg):
        where = self.source or "<config>"
        line = self.lines.get(key)
        prefix = f"{where}:{line}: " if line else f"{where}: "
        self.errors.append(f"{prefix}{key}: {msg}" if key else f"{prefix}{msg}")

    def get(self, raw, key, conv, default, check=None, what=""):
        if key not in raw:
            return default
        value = raw[key]
        try:
            out = conv(value)
        except (TypeError, ValueError, ConfigError) as exc:
            self.add(key, f"malformed value {value!r} ({exc})")
            return default
        if check is not None and not check(out):
            self.add(key, f"value {value!r} out of range ({what})")
            return default
        return out


def _int(v):
    if isinstance(v, bool):
        raise ValueError("expected an integer")
    if isinstance(v, float):
        if not v.is_integer():
            raise ValueError("expected an integer")
        return int(v)
    if isinstance(v, str):
        return int(v.strip())
    if isinstance(v, (int, np.integer)):
        return int(v)
    raise ValueError("expected an integer")


def _float(v):
    if isinstance(v, bool):
        raise ValueError("expected a number")
    return float(v)


def _float_list(v):
    if not isinstance(v, (list, tuple)) or not v:
        raise ValueError("expected a non-empty list")
    return [_float(x) for x in v]


def _int_list(v):
    if not isinstance(v, (list, tuple)) or not v:
        raise ValueError("expected a non-empty list")
    return [_int(x) for x in v]


def load_config(path) -> tuple[dict, dict]:
    """Read YAML, returning ``(raw mapping, key line numbers)``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"{where}: YAML syntax error: {getattr(exc, 'problem', exc)}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return raw, _key_lines(text)


def parse_config(path=None, raw: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Validate a config file (or an already-loaded mapping) into a :class:`RunConfig`.

    All problems are gathered before raising.  Limit experiments additionally
    require an admissible symbol; the error then lists the offending grid points.
    """
    lines = {}
    source = None
    if raw is None:
        if path is None:
            raise ValueError("need a path or a mapping")
        raw, lines = load_config(path)
        source = Path(path)
    raw = dict(raw)
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    base_dir = source.parent if source is not None else Path.cwd()
    col = _Collector(lines, str(source) if source else None)

    for key in raw:
        if key not in _KNOWN_KEYS:
            col.add(key, "unknown key")

    kind = raw.get("kind")
    if kind is None:
        col.add("", "missing required key 'kind'")
    elif kind not in KINDS:
        col.add("kind", f"unknown experiment kind {kind!r} (expected one of {', '.join(KINDS)})")
    cfg = RunConfig(kind=kind if kind in KINDS else "limits", source=source, raw=raw)

    cfg.seed = col.get(raw, "seed", _int, 0, lambda v: 0 <= v < 2**64, "0 <= seed < 2^64")
    cfg.threads = col.get(raw, "threads", _int, 1, lambda v: v >= 1, "threads >= 1")
    cfg.mode = col.get(raw, "mode", str, "real", lambda v: v in ("real", "complex"), "real or complex")
    cfg.n = col.get(raw, "n", _int, 1024, lambda v: v >= 2, "n >= 2")
    cfg.n_list = col.get(raw, "n_list", _int_list, cfg.n_list, lambda v: all(x >= 2 for x in v), "all n >= 2")
    cfg.times = col.get(raw, "times", _float_list, cfg.times, lambda v: all(0 <= x <= 1 for x in v), "times in [0, 1]")
    cfg.R = col.get(raw, "R", _int, 2000, lambda v: v >= 1, "R >= 1")
    if cfg.kind in ("verify-clt", "verify-fclt", "verify-selfsim") and cfg.R < 100:
        col.add("R", "Monte Carlo experiments need R >= 100")
    cfg.R_gauss = col.get(raw, "R_gauss", _int, None, lambda v: v >= 30, "R_gauss >= 30")
    M = raw.get("M", "auto")
    if M != "auto":
        cfg.M = col.get(raw, "M", _int, None, lambda v: v >= 0, "M >= 0 or 'auto'")
    cfg.M_cap = col.get(raw, "M_cap", _int, DEFAULT_M_CAP, lambda v: v >= 1, "M_cap >= 1")
    cfg.tail_rtol = col.get(raw, "tail_rtol", _float, DEFAULT_TAIL_RTOL, lambda v: v > 0, "tail_rtol > 0")
    cfg.a = col.get(raw, "a", _float, 0.5, lambda v: v > 0, "a > 0")
    cfg.a_list = col.get(raw, "a_list", _float_list, cfg.a_list, lambda v: all(x > 0 for x in v), "all a > 0")
    cfg.gaps = col.get(raw, "gaps", _float_list, cfg.gaps, lambda v: all(0 <= x <= 1 for x in v), "gaps in [0, 1]")
    cfg.u = col.get(raw, "u", _float, 0.25, lambda v: 0 <= v <= 1, "u in [0, 1]")
    if "out" in raw:
        cfg.out = Path(str(raw["out"]))

    fg = raw.get("fgrid", {}) or {}
    if not isinstance(fg, dict):
        col.add("fgrid", "expected a mapping with L and N")
        fg = {}
    try:
        cfg.fgrid = FourierGrid(_float(fg.get("L", DEFAULT_L)), _int(fg.get("N", DEFAULT_N)))
    except (TypeError, ValueError) as exc:
        col.add("fgrid", str(exc))

    if cfg.kind == "symbol-check":
        _parse_symbol_check(raw, cfg, col, base_dir)
    else:
        _parse_model(raw, cfg, col, base_dir)

    if "projections" in raw and cfg.grid is not None:
        try:
            P = np.array([[complex(x) for x in row] for row in raw["projections"]])
            if P.ndim != 2 or P.shape[1] != cfg.grid.size * (len(cfg.times) if cfg.kind == "verify-fclt" else 1):
                raise ValueError("each projection needs one entry per grid point (per time for verify-fclt)")
            cfg.projections = P
        except (TypeError, ValueError) as exc:
            col.add("projections", str(exc))

    if col.errors:
        raise ConfigError(col.errors)
    return cfg


def _parse_model(raw, cfg, col, base_dir):
    for key in ("grid", "symbol"):
        if key not in raw:
            col.add("", f"missing required key {key!r}")
    if "grid" in raw:
        try:
            cfg.grid = grid_from_spec(raw["grid"])
        except (ConfigError, TypeError, ValueError) as exc:
            col.add("grid", str(exc))
    if cfg.grid is None:
        return
    if "symbol" in raw:
        try:
            cfg.symbol = symbol_from_spec(raw["symbol"], cfg.grid, cfg.fgrid, base_dir)
        except (ConfigError, TypeError, ValueError) as exc:
            col.add("symbol", str(exc))
    if cfg.symbol is not None and cfg.symbol.size != cfg.grid.size:
        col.add("symbol", f"symbol has {cfg.symbol.size} values, grid has {cfg.grid.size} points")
        cfg.symbol = None
    try:
        cfg.kernel = kernel_from_spec(raw.get("kernel", "identity"), cfg.grid, base_dir)
    except (ConfigError, TypeError, ValueError) as exc:
        col.add("kernel", str(exc))
    if cfg.kernel is not None and cfg.mode == "real" and not cfg.kernel.is_real:
        col.add("mode", "real-mode innovations need a real kernel; use mode: complex")
    u = raw.get("unitary", "identity")
    if u in ("identity", "dft"):
        cfg.unitary = UnitarySpec(u, cfg.grid.size)
    else:
        col.add("unitary", f"unknown unitary {u!r} (identity or dft)")
    if cfg.symbol is not None and cfg.kind in LIMIT_KINDS:
        bad = inadmissible_points(cfg.symbol)
        if bad.size:
            shown = ", ".join(
                f"#{i} (s={_show(cfg.grid.points[i])}, h={cfg.symbol.h[i]:.6g})" for i in bad[:20]
            )
            more = f" and {bad.size - 20} more" if bad.size > 20 else ""
            col.add(
                "symbol",
                f"inadmissible for {cfg.kind}: the limit theorems assume 1/2 < h(s) < 1 at every "
                f"grid point (hypothesis of the central limit theorem for n^(-H) S_n); "
                f"violated at {shown}{more}",
            )


def _show(p):
    try:
        return f"{float(p):.6g}"
    except (TypeError, ValueError):
        return repr(p)


def _parse_symbol_check(raw, cfg, col, base_dir):
    spec = raw.get("convolution")
    if spec is None and isinstance(raw.get("symbol"), dict):
        spec = raw["symbol"].get("convolution")
    if spec is None:
        col.add("", "symbol-check needs a 'convolution' kernel spec (e.g. exp-delta: {a: 8})")
        return
    try:
        cfg.conv_kernel = conv_kernel_from_spec(spec, cfg.fgrid, base_dir)
    except (ConfigError, TypeError, ValueError) as exc:
        col.add("convolution", str(exc))
