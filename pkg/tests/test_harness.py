import numpy as np
import pytest

from lrdhilbert.errors import DomainError
from lrdhilbert.grid import uniform_grid
from lrdhilbert.harness import (
    ExperimentConfig,
    VerificationReport,
    convergence_sweep_clt,
    convergence_sweep_fclt,
    default_projections,
    gaussianity_stats,
    mc_clt_experiment,
    mc_fclt_experiment,
    moment_scaling_check,
    selfsim_mc_check,
    strictly_decreasing,
)
from lrdhilbert.innovations import CovarianceKernel
from lrdhilbert.operators import MultiplicationSymbol, UnitarySpec, normalization_power
from lrdhilbert.process import ProcessConfig, exact_Sn_covariance, simulate_path


def test_gaussianity_stats():
    st = gaussianity_stats(np.full(40, 3.0))
    assert st["degenerate"] and st["var"] == 0
    st = gaussianity_stats(np.tile([-1.0, 1.0], 20))
    assert st["skewness"] == pytest.approx(0.0, abs=1e-15)
    assert st["excess_kurtosis"] == pytest.approx(-2.0)
    assert st["se_skew"] == pytest.approx(np.sqrt(6 / 40))
    with pytest.raises(ValueError):
        gaussianity_stats(np.ones(10))


def test_report_gating():
    rep = VerificationReport()
    rep.add("a", 1.0, 2.0, True)
    rep.add("b", 5.0, 2.0, False, gating=False)
    assert rep.passed
    rep.add("c", 5.0, 2.0, False)
    assert not rep.passed and [r.name for r in rep.failed()] == ["c"]
    assert rep.to_dict()["passed"] is False


def test_clt_sweep_decreasing_and_guard():
    s = MultiplicationSymbol([0.75 + 0.1j, 0.8 - 0.05j])
    k = CovarianceKernel([[1.0, 0.3], [0.3, 1.0]])
    rows = convergence_sweep_clt(s, k, [2**9, 2**13])
    assert rows[1]["err"] < rows[0]["err"]
    with pytest.raises(DomainError):
        convergence_sweep_clt(MultiplicationSymbol([0.3]), CovarianceKernel.identity(1), [16])


def test_fclt_sweep_rows():
    s = MultiplicationSymbol([0.75])
    k = CovarianceKernel.identity(1)
    n_list = [2**8, 2**10, 2**12]
    clt = convergence_sweep_clt(s, k, n_list)
    rows = convergence_sweep_fclt(s, k, n_list, [(1.0, 1.0), (0.5, 0.5), (0.3, 0.7)])
    ones = [r for r in rows if (r["t"], r["u"]) == (1.0, 1.0)]
    for a, b in zip(ones, clt):
        assert a["err"] == pytest.approx(b["err"], rel=1e-12, abs=1e-12)
    half = [r["err"] for r in rows if (r["t"], r["u"]) == (0.5, 0.5)]
    assert strictly_decreasing(half)
    assert all(r["disc_ok"] for r in rows)
    frac = [r for r in rows if (r["t"], r["u"]) == (0.3, 0.7)]
    assert all(r["disc"] > 0 for r in frac)


def small_config(R=400, n=64, mode="real", seed=2, times=(1.0,)):
    g = uniform_grid(0, 1, 3)
    s = MultiplicationSymbol([0.7, 0.75, 0.85])
    k = CovarianceKernel.squared_exponential(g.points, 0.6)
    return ExperimentConfig(ProcessConfig(s, k, n, 256, mode=mode, seed=seed, grid=g), R=R, times=times)


def test_mc_clt_small():
    rep = mc_clt_experiment(small_config())
    assert rep.passed, [r for r in rep.records if not r.passed]
    names = {r.name for r in rep.records}
    assert {"cov_fraction_within_4se", "limit_gap", "proj0_skew_z"} <= names
    assert not next(r for r in rep.records if r.name == "limit_gap").gating


def test_mc_clt_degenerate_kernel():
    s = MultiplicationSymbol([0.75, 0.8])
    pc = ProcessConfig(s, CovarianceKernel(np.zeros((2, 2))), 32, 16)
    rep = mc_clt_experiment(ExperimentConfig(pc, R=100))
    assert rep.passed and rep.records[0].name == "degenerate_all_zero"


def test_mc_fclt_small_and_time_zero():
    rep = mc_fclt_experiment(small_config(times=(0.0, 0.5, 1.0)))
    assert rep.passed, [r for r in rep.records if not r.passed]
    assert any(r.name.startswith("zero_at_t0") and r.passed for r in rep.records)


def test_mc_fclt_single_time_reduces_to_clt():
    a = mc_clt_experiment(small_config(R=200))
    b = mc_fclt_experiment(small_config(R=200), times=(1.0,))
    assert np.allclose(a.tables["empirical"], b.tables["empirical"], rtol=1e-12)
    assert np.allclose(a.tables["exact"], b.tables["exact"], rtol=1e-12)


def test_physical_and_spectral_norms_agree():
    m = 4
    s = MultiplicationSymbol([0.7, 0.75 + 0.1j, 0.8, 0.9])
    cfg = ProcessConfig(s, CovarianceKernel.identity(m), 32, 64, mode="complex", seed=4)
    U = UnitarySpec.dft(m)
    Sn = normalization_power(s, 32, simulate_path(cfg, 0)[:32].sum(0))
    physical = U.apply_adjoint(Sn)
    assert abs(np.linalg.norm(physical) - np.linalg.norm(Sn)) < 1e-12 * np.linalg.norm(Sn)


def test_moment_scaling():
    s = MultiplicationSymbol([0.75])
    k = CovarianceKernel.identity(1)
    res = moment_scaling_check(s, k, 256, [0.0, 1 / 8, 1 / 16, 1 / 32], 1024)
    assert res["rows"][0]["moment"] == 0.0
    assert res["hilfs_ok"]
    assert res["target"] == pytest.approx(1.5)
    assert 1.0 < res["slope"] < 2.0
    with pytest.raises(DomainError):
        moment_scaling_check(s, k, 100, [1 / 8], 1024)


def test_selfsim_mc():
    s = MultiplicationSymbol([0.7, 0.8 + 0.1j])
    k = CovarianceKernel.identity(2)
    rep = selfsim_mc_check(s, k, 1.0, [0.5, 1.0], 500, seed=3)
    diff = next(r for r in rep.records if r.name == "mc_cov_max_abs_diff")
    assert diff.statistic == 0.0
    rep = selfsim_mc_check(s, k, 0.5, [0.25, 0.5, 1.0], 2000, seed=3)
    assert rep.passed


def test_default_projections():
    P = default_projections(4)
    assert P.shape == (3, 4)
    assert np.allclose(np.linalg.norm(P, axis=1), 1.0)
    assert default_projections(1).shape == (2, 1)
