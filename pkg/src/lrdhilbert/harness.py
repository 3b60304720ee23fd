"""Verification experiments for the limit theorems.

Gating checks always compare against an exact finite-``n`` oracle (or an exact
identity); distances to the asymptotic limit are reported but never
thresholded, because no convergence rate is available to threshold them with.
Monte Carlo gates are stated at the 4-standard-error level.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .innovations import CovarianceKernel, InnovationSampler, covariance_standard_errors, empirical_covariance
from .limits import clt_limit_covariance, fclt_V, fclt_V_gram, selfsim_residual
from .operators import MultiplicationSymbol, normalization_power, require_admissible
from .process import (
    ProcessConfig,
    _floor_frac,
    anj_matrix,
    exact_cross_covariance,
    exact_Sn_covariance,
    exact_zeta_cross_cov,
    normalize_covariance,
)

__all__ = [
    "CheckRecord",
    "VerificationReport",
    "ExperimentConfig",
    "default_projections",
    "strictly_decreasing",
    "convergence_sweep_clt",
    "convergence_sweep_fclt",
    "mc_draws",
    "mc_clt_experiment",
    "mc_fclt_experiment",
    "moment_scaling_check",
    "selfsim_mc_check",
    "gaussianity_stats",
    "zscore_table",
]

Z_GATE = 4.0


@dataclass
class CheckRecord:
    name: str
    statistic: float
    threshold: float
    passed: bool
    gating: bool = True
    note: str = ""


@dataclass
class VerificationReport:
    """Check records plus the metadata needed to reproduce them."""

    records: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    def add(self, name, statistic, threshold, passed, gating=True, note=""):
        rec = CheckRecord(name, float(statistic), float(threshold), bool(passed), gating, note)
        self.records.append(rec)
        return rec

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records if r.gating)

    def failed(self) -> list:
        return [r for r in self.records if r.gating and not r.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "records": [asdict(r) for r in self.records],
            "metadata": self.metadata,
        }

    def merge(self, other: "VerificationReport", prefix: str = ""):
        for r in other.records:
            self.records.append(CheckRecord(prefix + r.name, r.statistic, r.threshold, r.passed, r.gating, r.note))
        for k, v in other.tables.items():
            self.tables[prefix + k] = v
        return self


@dataclass
class ExperimentConfig:
    """One Monte Carlo experiment.

    ``R`` replications feed the covariance gates; the Gaussianity diagnostics
    use the first ``R_gauss`` replications (default ``R``).
    """

    process: ProcessConfig
    R: int = 2000
    times: tuple = (1.0,)
    R_gauss: int | None = None
    projections: np.ndarray | None = None
    threads: int = 1
    first_replication: int = 0

    def __post_init__(self):
        if self.R < 100:
            raise ValueError("Monte Carlo experiments need R >= 100")
        if self.R_gauss is not None and self.R_gauss < 30:
            raise ValueError("Gaussianity diagnostics need at least 30 samples")
        if any(not 0.0 <= t <= 1.0 for t in self.times):
            raise DomainError("times must lie in [0, 1]")
        if self.process.n < 2:
            raise ValueError("n must be >= 2")

    @property
    def total_replications(self) -> int:
        return max(self.R, self.R_gauss or 0)


def default_projections(m: int) -> np.ndarray:
    """First two canonical directions plus the normalized all-ones vector."""
    vecs = [np.eye(m)[0]]
    if m > 1:
        vecs.append(np.eye(m)[1])
    vecs.append(np.ones(m) / math.sqrt(m))
    return np.array(vecs)


def strictly_decreasing(values) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) < 0))


# ---------------------------------------------------------------------------
# deterministic sweeps
# ---------------------------------------------------------------------------


def convergence_sweep_clt(symbol: MultiplicationSymbol, kernel: CovarianceKernel, n_list, M=None) -> list[dict]:
    """``err(n) = max |n^(d(r,s)-3) E S_n(r) conj S_n(s) - limit(r,s)|`` for each ``n``."""
    require_admissible(symbol)
    limit = clt_limit_covariance(symbol, kernel)
    rows = {}
    # largest n first so the cached lag tables serve the smaller ones
    for n in sorted({int(n) for n in n_list}, reverse=True):
        cov = normalize_covariance(symbol, exact_Sn_covariance(symbol, kernel, n, M), n)
        rows[n] = {"n": n, "err": float(np.max(np.abs(cov - limit))), "cov": cov}
    return [rows[int(n)] for n in n_list]


def convergence_sweep_fclt(symbol, kernel, n_list, times, M=None) -> list[dict]:
    """Per ``n`` and ``(t, u)``: normalized covariance, distance to ``V`` and the zeta-vs-S discrepancy.

    The discrepancy compares ``E zeta_n(t) conj zeta_n(u)`` with the
    S-based cross covariance at ``(floor(nt), floor(nu))``; ``disc_bound``
    is its Cauchy-Schwarz bound from exact second moments.  Both are
    normalized entrywise by ``n^(d(r,s)-3)``.
    """
    require_admissible(symbol)
    m = symbol.size
    r = np.arange(m)[:, None]
    s = np.arange(m)[None, :]
    pairs = [(float(t), float(u)) for t, u in times]
    rows = []
    for n in sorted({int(n) for n in n_list}, reverse=True):
        g0 = np.sqrt(np.abs(exact_cross_covariance(symbol, kernel, 1, 1.0, 1.0, M).diagonal()))
        for t, u in pairs:
            V = fclt_V(symbol, kernel, r, s, t, u)
            zc = exact_zeta_cross_cov(symbol, kernel, n, t, u, M)
            p, f = _floor_frac(n, t)
            q, g = _floor_frac(n, u)
            sc = exact_cross_covariance(symbol, kernel, n, p / n, q / n, M)
            Sp = np.sqrt(np.abs(exact_cross_covariance(symbol, kernel, n, p / n, p / n, M).diagonal()))
            Sq = np.sqrt(np.abs(exact_cross_covariance(symbol, kernel, n, q / n, q / n, M).diagonal()))
            bound = g * Sp[:, None] * g0[None, :] + f * g0[:, None] * Sq[None, :] + f * g * g0[:, None] * g0[None, :]
            scale = np.abs(normalize_covariance(symbol, np.ones((m, m)), n))
            cov = normalize_covariance(symbol, zc, n)
            rows.append({
                "n": n,
                "t": t,
                "u": u,
                "err": float(np.max(np.abs(cov - V))),
                "cov": cov,
                "disc": float(np.max(scale * np.abs(zc - sc))),
                "disc_bound": float(np.max(scale * bound)),
                "disc_ok": bool(np.all(np.abs(zc - sc) <= bound * (1 + 1e-9) + 1e-12)),
            })
    order = {int(n): i for i, n in enumerate(n_list)}
    rows.sort(key=lambda row: (order[row["n"]], pairs.index((row["t"], row["u"]))))
    return rows


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def _map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def mc_draws(config: ProcessConfig, times, replications, threads: int = 1) -> np.ndarray:
    """``n^(-H) zeta_n(t)`` for each replication and time, shape ``(R, q, m)``.

    ``zeta_n(t) = sum_j a_nj(t) eps_j`` over the innovations
    ``eps_{1-M} .. eps_{n+1}``, i.e. exactly the innovations behind
    :func:`~lrdhilbert.process.simulate_path` for the same replication.
    """
    n, M = config.n, config.M
    symbol = config.symbol
    coefs = np.stack([anj_matrix(symbol, n, t, M, 1 - M, n + 1)[1] for t in times])
    norm = normalization_power(symbol, n, np.ones(symbol.size))
    sampler = config.sampler

    def one(rep):
        eps = sampler.sample_block(1 - M, n + M + 1, rep)
        return np.einsum("qjm,jm->qm", coefs, eps) * norm

    return np.stack(_map(one, [int(r) for r in replications], threads))


def zscore_table(draws, exact) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(empirical, standard errors, |z|)`` for a covariance; ``0/0`` counts as ``z = 0``."""
    emp = empirical_covariance(draws)
    se = covariance_standard_errors(draws)
    diff = np.abs(emp - exact)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 1e-12, np.inf, 0.0))
    return emp, se, z


def gaussianity_stats(samples) -> dict:
    """Sample moments with Gaussian-reference standard errors."""
    x = np.asarray(samples, dtype=float).ravel()
    R = x.size
    if R < 30:
        raise ValueError("need at least 30 samples")
    mean = float(x.mean())
    c = x - mean
    var = float(np.mean(c * c))
    out = {
        "n": R,
        "mean": mean,
        "var": var,
        "se_mean": math.sqrt(var / R),
        "se_skew": math.sqrt(6.0 / R),
        "se_kurt": math.sqrt(24.0 / R),
        "degenerate": var <= 1e-300,
    }
    if out["degenerate"]:
        out["skewness"] = 0.0
        out["excess_kurtosis"] = 0.0
    else:
        out["skewness"] = float(np.mean(c**3) / var**1.5)
        out["excess_kurtosis"] = float(np.mean(c**4) / var**2 - 3.0)
    return out


def _process_metadata(config: ProcessConfig) -> dict:
    return {
        "n": config.n,
        "M": config.M,
        "tail_bound": config.tail_bound(),
        "seed": config.seed,
        "mode": config.mode,
        "grid_size": config.m,
    }


def _gaussianity_records(report, draws, projections, label):
    for i, v in enumerate(projections):
        proj = (draws @ np.conj(v)).real
        st = gaussianity_stats(proj)
        report.tables[f"{label}gauss_{i}"] = st
        if st["degenerate"]:
            report.add(f"{label}proj{i}_degenerate", 0.0, 0.0, True)
            continue
        report.add(f"{label}proj{i}_skew_z", abs(st["skewness"]) / st["se_skew"], Z_GATE,
                   abs(st["skewness"]) < Z_GATE * st["se_skew"])
        report.add(f"{label}proj{i}_kurt_z", abs(st["excess_kurtosis"]) / st["se_kurt"], Z_GATE,
                   abs(st["excess_kurtosis"]) < Z_GATE * st["se_kurt"])


def mc_clt_experiment(config: ExperimentConfig, min_fraction: float = 0.95) -> VerificationReport:
    """Empirical covariance of ``n^(-H) S_n`` against the exact finite-``n`` value.

    Gates: the fraction of entries within 4 SE is at least ``min_fraction``;
    projection skewness and excess kurtosis within 4 SE of zero.  The gap to
    the limit covariance is reported only.
    """
    pc = config.process
    reps = np.arange(config.first_replication, config.first_replication + config.total_replications)
    draws = mc_draws(pc, (1.0,), reps, config.threads)[:, 0, :]
    exact = normalize_covariance(pc.symbol, exact_Sn_covariance(pc.symbol, pc.kernel, pc.n, pc.M), pc.n)
    report = VerificationReport(metadata={**_process_metadata(pc), "R": config.R,
                                          "R_gauss": config.R_gauss or config.R, "experiment": "clt"})
    cov_draws = draws[: config.R]
    if not np.any(cov_draws):
        report.add("degenerate_all_zero", 0.0, 0.0, bool(np.all(exact == 0)))
        return report
    emp, se, z = zscore_table(cov_draws, exact)
    frac = float(np.mean(z <= Z_GATE))
    report.add("cov_fraction_within_4se", frac, min_fraction, frac >= min_fraction)
    report.add("cov_max_z", float(np.max(z)), Z_GATE, True, gating=False)
    try:
        limit = clt_limit_covariance(pc.symbol, pc.kernel)
        report.add("limit_gap", float(np.max(np.abs(emp - limit))), math.inf, True, gating=False,
                   note="empirical vs asymptotic covariance; informative only")
    except DomainError as exc:
        report.add("limit_gap", math.nan, math.inf, True, gating=False, note=str(exc))
    report.tables.update({"empirical": emp, "exact": exact, "se": se})
    proj = config.projections if config.projections is not None else default_projections(pc.m)
    _gaussianity_records(report, draws[: config.R_gauss or config.R], proj, "")
    return report


def mc_fclt_experiment(config: ExperimentConfig, times=None) -> VerificationReport:
    """Joint covariance of ``n^(-H) zeta_n(t_i)`` against the exact oracle, all entries within 4 SE."""
    pc = config.process
    times = tuple(float(t) for t in (times if times is not None else config.times))
    if any(not 0.0 <= t <= 1.0 for t in times):
        raise DomainError("times must lie in [0, 1]")
    m, q = pc.m, len(times)
    reps = np.arange(config.first_replication, config.first_replication + config.total_replications)
    draws = mc_draws(pc, times, reps, config.threads)
    flat = draws.reshape(draws.shape[0], q * m)
    exact = np.zeros((q * m, q * m), dtype=complex)
    for i, t in enumerate(times):
        for j, u in enumerate(times[i:], start=i):
            blk = normalize_covariance(pc.symbol, exact_zeta_cross_cov(pc.symbol, pc.kernel, pc.n, t, u, pc.M), pc.n)
            exact[i * m:(i + 1) * m, j * m:(j + 1) * m] = blk
            exact[j * m:(j + 1) * m, i * m:(i + 1) * m] = blk.conj().T
    report = VerificationReport(metadata={**_process_metadata(pc), "R": config.R, "times": list(times),
                                          "experiment": "fclt"})
    emp, se, z = zscore_table(flat[: config.R], exact)
    report.add("cov_max_z", float(np.max(z)), Z_GATE, bool(np.all(z <= Z_GATE)))
    report.add("cov_fraction_within_4se", float(np.mean(z <= Z_GATE)), 1.0, True, gating=False)
    for i, t in enumerate(times):
        if t == 0.0:
            report.add(f"zero_at_t0_{i}", float(np.max(np.abs(draws[:, i, :]))), 0.0,
                       not np.any(draws[:, i, :]))
    try:
        idx = np.arange(m)
        V = np.block([[fclt_V(pc.symbol, pc.kernel, idx[:, None], idx[None, :], t, u) for u in times] for t in times])
        report.add("limit_gap", float(np.max(np.abs(emp - V))), math.inf, True, gating=False,
                   note="empirical vs asymptotic covariance; informative only")
    except DomainError as exc:
        report.add("limit_gap", math.nan, math.inf, True, gating=False, note=str(exc))
    report.tables.update({"empirical": emp, "exact": exact, "se": se})
    proj = config.projections if config.projections is not None else default_projections(q * m)
    if proj.shape[1] == q * m:
        _gaussianity_records(report, flat[: config.R_gauss or config.R], proj, "joint_")
    return report


# ---------------------------------------------------------------------------
# tightness and self-similarity
# ---------------------------------------------------------------------------


def moment_scaling_check(symbol, kernel, n, gap_list, M, grid=None, u: float = 0.25) -> dict:
    """Exact ``E||n^(-H)(zeta_n(u+gap) - zeta_n(u))||^2`` over gaps, a log-log slope and the per-point inequality.

    Times must be grid aligned (``n*u`` and ``n*gap`` integers).  Returns
    ``{"rows", "slope", "target", "hilfs_ok"}`` where ``target = 3 - 2 max h``.
    """
    require_admissible(symbol)
    if M is None:
        raise DomainError("the a_nj route needs a finite truncation order")
    n = int(n)
    gaps = [float(g) for g in gap_list]
    for x in [u] + gaps:
        if abs(n * x - round(n * x)) > 1e-9 or not 0 <= x <= 1:
            raise DomainError(f"time {x} is not aligned with the grid 1/{n}")
    if u + max(gaps) > 1 + 1e-12:
        raise DomainError("u + gap must not exceed 1")
    h = symbol.h
    w = np.ones(symbol.size) if grid is None else grid.weights
    const = 2.0 / (1.0 - h) ** 2 + 1.0 / (2.0 * h - 1.0)
    top = int(round(n * (u + max(gaps)))) + 1
    _, Au = anj_matrix(symbol, n, u, M, 1 - M, top)
    rows = []
    for gap in gaps:
        if gap == 0:
            rows.append({"gap": 0.0, "moment": 0.0, "hilfs_lhs": np.zeros(symbol.size), "hilfs_rhs": np.zeros(symbol.size)})
            continue
        _, At = anj_matrix(symbol, n, u + gap, M, 1 - M, top)
        per_point = np.sum(np.abs(At - Au) ** 2, axis=0)
        lhs = per_point * np.exp(-(3.0 - 2.0 * h) * math.log(n))
        rows.append({
            "gap": gap,
            "moment": float(np.sum(w * kernel.diag * lhs)),
            "hilfs_lhs": lhs,
            "hilfs_rhs": const * gap ** (3.0 - 2.0 * h),
        })
    pos = [r for r in rows if r["gap"] > 0 and r["moment"] > 0]
    slope = math.nan
    if len(pos) >= 2:
        slope = float(np.polyfit(np.log([r["gap"] for r in pos]), np.log([r["moment"] for r in pos]), 1)[0])
    ok = all(bool(np.all(r["hilfs_lhs"] <= r["hilfs_rhs"])) for r in rows)
    return {"rows": rows, "slope": slope, "target": 3.0 - 2.0 * symbol.h_bar, "hilfs_ok": ok}


def selfsim_mc_check(symbol, kernel, a, times, R, seed: int = 0, points=None, pairs=None) -> VerificationReport:
    """Covariance check of ``G(at) = a^H G(t)`` in finite-dimensional distribution.

    Exact Gaussian vectors with covariance ``V`` are drawn at the times ``a*t``
    and at ``t`` (then scaled by ``a^(3/2 - d)``) from the same normals, and
    their empirical covariances are compared entrywise at 4 combined SE.
    """
    require_admissible(symbol)
    if not a > 0:
        raise DomainError("a must be positive")
    if R < 100:
        raise ValueError("need R >= 100")
    points = np.arange(symbol.size) if points is None else np.asarray(points, dtype=int)
    times = np.asarray(times, dtype=float)
    G_scaled = fclt_V_gram(symbol, kernel, points, a * times)
    G_base = fclt_V_gram(symbol, kernel, points, times)
    complex_case = bool(np.any(np.abs(G_scaled.imag) > 0) or np.any(np.abs(G_base.imag) > 0))
    mode = "complex" if complex_case else "real"
    scale = np.repeat(np.exp((1.5 - symbol.d[points]) * math.log(a)), times.size)

    def draws(G):
        G = 0.5 * (G + G.conj().T)
        ker = CovarianceKernel(G if complex_case else G.real)
        sampler = InnovationSampler(ker, mode=mode, base_seed=seed)
        return sampler.sample_block(0, R, 0)

    y_scaled = draws(G_scaled)
    y_base = draws(G_base) * scale
    c1 = empirical_covariance(y_scaled)
    c2 = empirical_covariance(y_base)
    se = np.sqrt(covariance_standard_errors(y_scaled) ** 2 + covariance_standard_errors(y_base) ** 2)
    diff = np.abs(c1 - c2)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 1e-12, np.inf, 0.0))
    report = VerificationReport(metadata={"a": a, "R": R, "seed": seed, "times": times.tolist(),
                                          "points": points.tolist(), "experiment": "selfsim"})
    report.add("mc_cov_max_z", float(np.max(z)), Z_GATE, bool(np.all(z <= Z_GATE)))
    report.add("mc_cov_max_abs_diff", float(np.max(diff)), math.inf, True, gating=False)
    if pairs is None:
        pairs = [(r, s, t, u) for r in points for s in points for t in times for u in times]
    res = selfsim_residual(symbol, kernel, a, pairs)
    report.add("covariance_identity_residual", res, 1e-10, res < 1e-10)
    return report
