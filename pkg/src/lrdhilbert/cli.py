"""Command-line entry point.

    lrdhilbert --config run.yaml --out results/ [--seed S] [--threads K]

One experiment per invocation.  Results go to CSV/JSON files in the output
directory; ``manifest.json`` (the only file carrying a timestamp) records the
seed, library versions, truncation order and tail bound.  The exit status is
0 iff every gating check passed, 1 if a gate failed, 2 for an invalid config
and 3 for an I/O failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import itertools
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import LIMIT_KINDS, RunConfig, parse_config
from .convolution import admissible_range, fourier_symbol
from .errors import ConfigError, LRDError
from .harness import (
    ExperimentConfig,
    VerificationReport,
    convergence_sweep_clt,
    convergence_sweep_fclt,
    mc_clt_experiment,
    mc_fclt_experiment,
    moment_scaling_check,
    selfsim_mc_check,
    strictly_decreasing,
)
from .io import sha256_file, write_csv, write_ensemble, write_json, write_matrix_entries, write_v_samples
from .limits import check_hermitian_psd, clt_covariance_operator, fclt_V, fclt_V_gram, selfsim_residual
from .operators import NormalOperatorSpec, check_admissible
from .process import ProcessConfig, choose_truncation, second_moment, simulate_ensemble, truncation_tail_bound

log = logging.getLogger("lrdhilbert")

__all__ = ["main", "run", "resolve_truncation"]

EXIT_OK, EXIT_GATE, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def resolve_truncation(cfg: RunConfig) -> dict:
    """Truncation order for simulation plus what it costs in tail mass.

    ``M: auto`` picks the smallest power of two whose tail bound is at most
    ``tail_rtol * E||X_0||^2`` and then caps it at ``M_cap``; a binding cap
    is reported as a warning, never silently.
    """
    sym, ker, grid = cfg.symbol, cfg.kernel, cfg.grid
    target = cfg.tail_rtol * second_moment(sym, ker, grid)
    info = {"tail_rtol": cfg.tail_rtol, "tail_target": target, "warnings": []}
    if cfg.M is None:
        M_auto, met = choose_truncation(sym, ker, cfg.tail_rtol, grid)
        info["M_auto"] = M_auto
        M = min(M_auto, cfg.M_cap)
        if M < M_auto or not met:
            info["warnings"].append(
                f"auto truncation needs M = {M_auto} for the tail rule, capped at M_cap = {cfg.M_cap}; "
                "simulation gates compare against the exact truncated-process oracle at this M"
            )
    else:
        M = cfg.M
    bound = truncation_tail_bound(sym, ker.diag, M, grid)
    info.update(M=M, tail_bound=bound, tail_rule_met=bool(bound <= target))
    if cfg.M is not None and bound > target:
        info["warnings"].append(f"tail bound {bound:.3e} exceeds tail_rtol * E||X_0||^2 = {target:.3e}")
    return info


def _process(cfg: RunConfig, M: int) -> ProcessConfig:
    return ProcessConfig(cfg.symbol, cfg.kernel, cfg.n, M, mode=cfg.mode, seed=cfg.seed, grid=cfg.grid)


def _write_checks(out: Path, report: VerificationReport):
    rows = ((r.name, r.statistic, r.threshold, r.passed, r.gating, r.note) for r in report.records)
    write_csv(out / "checks.csv", ["name", "statistic", "threshold", "passed", "gating", "note"], rows)
    write_json(out / "report.json", report.to_dict())


def _write_mc_tables(out: Path, report: VerificationReport, name: str):
    emp, exact, se = report.tables["empirical"], report.tables["exact"], report.tables["se"]
    k = emp.shape[0]
    rows = (
        (i, j, emp[i, j].real, emp[i, j].imag, exact[i, j].real, exact[i, j].imag, se[i, j])
        for i in range(k) for j in range(k)
    )
    write_csv(out / name, ["i", "j", "emp_re", "emp_im", "exact_re", "exact_im", "se"], rows)


def _run_limits(cfg, out, report, meta):
    spec = NormalOperatorSpec(cfg.unitary, cfg.symbol)
    cg = clt_covariance_operator(spec, cfg.kernel, cfg.grid)
    write_matrix_entries(out / "cg_matrix.csv", cg)
    m = cfg.grid.size
    times = sorted(set(cfg.times))
    samples = [
        (r, s, t, u, fclt_V(cfg.symbol, cfg.kernel, r, s, t, u))
        for r, s in itertools.product(range(m), repeat=2)
        for t, u in itertools.product(times, repeat=2)
    ]
    write_v_samples(out / "v_samples.csv", samples)
    rep = check_hermitian_psd(cg)
    report.add("cg_hermitian_psd", rep.min_eig, -1e-8 * max(rep.max_eig, 0.0), rep.passed)
    rep = check_hermitian_psd(fclt_V_gram(cfg.symbol, cfg.kernel, np.arange(m), times))
    report.add("v_gram_hermitian_psd", rep.min_eig, -1e-8 * max(rep.max_eig, 0.0), rep.passed)
    report.add("v_gram_hermitian_defect", rep.hermitian_defect, 1e-10, rep.hermitian_defect < 1e-10)


def _run_simulate(cfg, out, report, meta):
    info = resolve_truncation(cfg)
    meta["truncation"] = info
    pc = _process(cfg, info["M"])
    ens = simulate_ensemble(pc, cfg.R, threads=cfg.threads)
    write_ensemble(out / "ensemble.csv", ens.paths, ens.replications)
    write_json(out / "ensemble.json", {
        "columns": ["replication", "k", "point_index", "re", "im"],
        "n": cfg.n, "R": cfg.R, "M": info["M"], "seed": cfg.seed, "mode": cfg.mode,
        "grid_points": cfg.grid.points, "grid_weights": cfg.grid.weights,
        "symbol": cfg.symbol.d, "tail_bound": info["tail_bound"],
        "note": "values are X_k in the spectral domain for k = 1..n+1",
    })


def _run_verify_clt(cfg, out, report, meta):
    sweep = convergence_sweep_clt(cfg.symbol, cfg.kernel, cfg.n_list, None)
    write_csv(out / "sweep_clt.csv", ["n", "err"], ((r["n"], r["err"]) for r in sweep))
    errs = [r["err"] for r in sorted(sweep, key=lambda r: r["n"])]
    report.add("sweep_err_strictly_decreasing", errs[-1], errs[0], strictly_decreasing(errs))
    info = resolve_truncation(cfg)
    meta["truncation"] = info
    exp = ExperimentConfig(_process(cfg, info["M"]), R=cfg.R, R_gauss=cfg.R_gauss,
                           projections=cfg.projections, threads=cfg.threads)
    mc = mc_clt_experiment(exp)
    report.merge(mc, "mc_")
    meta["mc"] = mc.metadata
    _write_mc_tables(out, mc, "mc_covariance.csv")


def _run_verify_fclt(cfg, out, report, meta):
    times = sorted(set(cfg.times))
    pairs = [(t, u) for t, u in itertools.product(times, repeat=2) if t <= u]
    sweep = convergence_sweep_fclt(cfg.symbol, cfg.kernel, cfg.n_list, pairs, None)
    write_csv(out / "sweep_fclt.csv", ["n", "t", "u", "err", "disc", "disc_bound"],
              ((r["n"], r["t"], r["u"], r["err"], r["disc"], r["disc_bound"]) for r in sweep))
    for t, u in pairs:
        errs = [r["err"] for r in sorted(sweep, key=lambda r: r["n"]) if (r["t"], r["u"]) == (t, u)]
        if t == 0:
            continue  # V vanishes and so does the finite-n covariance
        report.add(f"sweep_err_decreasing_t{t:g}_u{u:g}", errs[-1], errs[0], strictly_decreasing(errs))
    report.add("zeta_vs_S_within_bound", 0.0, 0.0, all(r["disc_ok"] for r in sweep))
    info = resolve_truncation(cfg)
    meta["truncation"] = info
    exp = ExperimentConfig(_process(cfg, info["M"]), R=cfg.R, R_gauss=cfg.R_gauss, times=tuple(times),
                           projections=cfg.projections, threads=cfg.threads)
    mc = mc_fclt_experiment(exp)
    report.merge(mc, "mc_")
    meta["mc"] = mc.metadata
    _write_mc_tables(out, mc, "mc_covariance.csv")


def _run_verify_selfsim(cfg, out, report, meta):
    m = cfg.grid.size
    pairs = [(r, s, t, u) for r in range(m) for s in range(m) for t in cfg.times for u in cfg.times]
    rows = []
    for a in cfg.a_list:
        res = selfsim_residual(cfg.symbol, cfg.kernel, a, pairs)
        rows.append((a, res))
        report.add(f"residual_a{a:g}", res, 1e-10, res < 1e-10)
    write_csv(out / "selfsim_residuals.csv", ["a", "residual"], rows)
    mc = selfsim_mc_check(cfg.symbol, cfg.kernel, cfg.a, cfg.times, cfg.R, seed=cfg.seed)
    report.merge(mc, f"mc_a{cfg.a:g}_")


def _run_verify_tightness(cfg, out, report, meta):
    info = resolve_truncation(cfg)
    meta["truncation"] = info
    res = moment_scaling_check(cfg.symbol, cfg.kernel, cfg.n, cfg.gaps, info["M"], cfg.grid, cfg.u)
    rows = []
    for r in res["rows"]:
        for i in range(cfg.grid.size):
            lhs = r["hilfs_lhs"][i] if np.ndim(r["hilfs_lhs"]) else r["hilfs_lhs"]
            rhs = r["hilfs_rhs"][i] if np.ndim(r["hilfs_rhs"]) else r["hilfs_rhs"]
            rows.append((r["gap"], r["moment"], i, float(lhs), float(rhs)))
    write_csv(out / "tightness.csv", ["gap", "moment", "point_index", "pointwise_lhs", "pointwise_bound"], rows)
    dev = abs(res["slope"] - res["target"])
    report.add("loglog_slope_deviation", dev, 0.1, dev <= 0.1, note=f"slope {res['slope']:.6g} vs {res['target']:.6g}")
    report.add("pointwise_bound_holds", 0.0, 0.0, res["hilfs_ok"])


def _run_symbol_check(cfg, out, report, meta):
    k = cfg.conv_kernel
    sym = fourier_symbol(k, cfg.fgrid)
    s = cfg.fgrid.s
    order = np.argsort(s, kind="stable")
    write_csv(out / "symbol.csv", ["k", "s", "re", "im"],
              ((int(i), s[i], sym.d[i].real, sym.d[i].imag) for i in order))
    grid_ok = check_admissible(sym)
    report.add("grid_symbol_admissible", sym.h_bar, 1.0, grid_ok,
               note=f"h on the frequency grid spans [{sym.h_min:.6g}, {sym.h_bar:.6g}]")
    if k.kind == "exp-delta":
        ok = admissible_range(k.a)
        note = (f"a = {k.a:g} satisfies a > 4" if ok
                else f"a = {k.a:g} violates the admissibility condition a > 4 (sup h = 2/a + 1/2 = {2 / k.a + 0.5:g} >= 1)")
        report.add("exp_delta_a_gt_4", k.a, 4.0, ok, note=note)
        if not ok:
            log.error(note)
    meta["fgrid"] = {"L": cfg.fgrid.L, "N": cfg.fgrid.N}


_RUNNERS = {
    "limits": _run_limits,
    "simulate": _run_simulate,
    "verify-clt": _run_verify_clt,
    "verify-fclt": _run_verify_fclt,
    "verify-selfsim": _run_verify_selfsim,
    "verify-tightness": _run_verify_tightness,
    "symbol-check": _run_symbol_check,
}


def run(cfg: RunConfig, out: Path | None = None, argv=None) -> int:
    """Execute one experiment and write its artifacts; returns the exit code."""
    out = Path(out or cfg.out or "results")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory %s: %s", out, exc)
        return EXIT_IO
    report = VerificationReport()
    meta = {"kind": cfg.kind, "seed": cfg.seed}
    try:
        _RUNNERS[cfg.kind](cfg, out, report, meta)
        _write_checks(out, report)
    except OSError as exc:
        log.error("I/O failure under %s: %s", out, exc)
        return EXIT_IO
    files = sorted(p for p in out.iterdir() if p.is_file() and p.name != "manifest.json")
    manifest = {
        **meta,
        "passed": report.passed,
        "failed_checks": [r.name for r in report.failed()],
        "config": str(cfg.source) if cfg.source else None,
        "threads": cfg.threads,
        "argv": list(argv) if argv is not None else None,
        "versions": {
            "lrdhilbert": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "files": {p.name: sha256_file(p) for p in files},
    }
    for w in meta.get("truncation", {}).get("warnings", []):
        log.warning(w)
    try:
        write_json(out / "manifest.json", manifest)
    except OSError as exc:
        log.error("cannot write manifest under %s: %s", out, exc)
        return EXIT_IO
    for r in report.records:
        status = "PASS" if r.passed else "FAIL"
        tag = "" if r.gating else " (info)"
        log.info("%s %s: %.6g vs %.6g%s", status, r.name, r.statistic, r.threshold, tag)
    return EXIT_OK if report.passed else EXIT_GATE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lrdhilbert", description=__doc__.split("\n\n")[0])
    p.add_argument("--config", required=True, help="YAML experiment description")
    p.add_argument("--out", help="output directory (default: config 'out' or ./results)")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--threads", type=int, help="worker threads; never changes results")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    overrides = {"seed": args.seed, "threads": args.threads}
    try:
        cfg = parse_config(args.config, overrides=overrides)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code = run(cfg, Path(args.out) if args.out else None, argv)
    except LRDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if code == EXIT_GATE:
        print("one or more gating checks failed; see checks.csv", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
