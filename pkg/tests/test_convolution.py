import numpy as np
import pytest

from lrdhilbert.convolution import (
    FourierGrid,
    KernelSpec,
    admissible_range,
    apply_convolution,
    exp_delta_symbol,
    fourier_symbol,
    fourier_transform,
    inverse_fourier_transform,
    kernel_from_spec,
    symbol_admissible,
)
from lrdhilbert.errors import ConfigError, DimensionError, DomainError


def direct_convolution(K, f, fg):
    N = fg.N
    i = np.arange(N)[:, None]
    j = np.arange(N)[None, :]
    return fg.dx * (K[None, :] * f[(i - j + N // 2) % N]).sum(axis=1)


def test_fourier_grid():
    fg = FourierGrid(60.0, 1 << 14)
    assert fg.dx == pytest.approx(120 / 2**14)
    assert fg.ds == pytest.approx(np.pi / 60)
    assert fg.x[fg.N // 2] == 0.0
    assert fg.s.min() == pytest.approx(-np.pi / fg.dx)
    assert fg.s.max() < np.pi / fg.dx
    with pytest.raises(ValueError):
        FourierGrid(1.0, 100)
    with pytest.raises(ValueError):
        FourierGrid(0.0, 64)


def test_exp_delta_symbol_examples():
    assert exp_delta_symbol(8, 0) == 0.75
    assert exp_delta_symbol(5, 5) == pytest.approx(0.7)
    assert exp_delta_symbol(8, 1e8) == pytest.approx(0.5)
    assert exp_delta_symbol(8, 1e8) > 0.5
    with pytest.raises(DomainError):
        exp_delta_symbol(0, 1)


def test_admissible_range():
    assert [admissible_range(a) for a in (3, 4, 4.01, 5, 8)] == [False, False, True, True, True]
    with pytest.raises(DomainError):
        admissible_range(-1)


def test_symbol_of_zero_kernel_and_pure_delta():
    fg = FourierGrid(3.0, 64)
    zero = KernelSpec.tabulated(np.zeros(64))
    assert np.all(fourier_symbol(zero, fg).d == 0)
    f = np.random.default_rng(0).normal(size=64)
    half = KernelSpec.tabulated(np.zeros(64), delta=0.5)
    assert np.allclose(apply_convolution(half, f, fg), 0.5 * f, atol=1e-14)
    assert np.allclose(fourier_symbol(half, fg).d, 0.5)
    assert np.all(apply_convolution(zero, np.zeros(64), fg) == 0)


def test_tabulated_exponential_symbol():
    fg = FourierGrid()
    d = fourier_symbol(KernelSpec.tabulated(np.exp(-5 * np.abs(fg.x))), fg).d
    s = fg.s
    mask = np.abs(s) <= 10
    assert np.max(np.abs(d[mask] - 10 / (25 + s[mask] ** 2))) < 1e-3
    assert np.max(np.abs(d.imag)) < 1e-10


def test_exp_delta_symbol_on_grid():
    fg = FourierGrid()
    sym = fourier_symbol(KernelSpec.exp_delta(8), fg)
    assert abs(sym.d[0] - 0.75) < 1e-3
    mask = np.abs(fg.s) <= 10
    assert np.max(np.abs(sym.d[mask] - exp_delta_symbol(8, fg.s[mask]))) < 1e-3
    assert sym.h_min > 0.5
    for a in (3, 4, 4.5, 8):
        assert symbol_admissible(KernelSpec.exp_delta(a), fg) == admissible_range(a)


def test_convolution_matches_direct_sum():
    rng = np.random.default_rng(1)
    fg = FourierGrid(4.0, 128)
    K = rng.normal(size=128) + 1j * rng.normal(size=128)
    f = rng.normal(size=128) + 1j * rng.normal(size=128)
    got = apply_convolution(KernelSpec.tabulated(K), f, fg)
    ref = direct_convolution(K, f, fg)
    assert np.max(np.abs(got - ref)) < 1e-10 * np.max(np.abs(ref))
    got = apply_convolution(KernelSpec.exp_delta(2.0), f, fg)
    ref = direct_convolution(np.exp(-2 * np.abs(fg.x)), f, fg) + 0.5 * f
    assert np.max(np.abs(got - ref)) < 1e-10 * np.max(np.abs(ref))


def test_factorization_identity():
    rng = np.random.default_rng(2)
    fg = FourierGrid(10.0, 256)
    K = np.exp(-np.abs(fg.x)) * rng.uniform(0.5, 1.5, 256)
    f = rng.normal(size=256)
    lhs = fourier_transform(apply_convolution(KernelSpec.tabulated(K), f, fg), fg)
    rhs = np.sqrt(2 * np.pi) * fourier_transform(K, fg) * fourier_transform(f, fg)
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * np.max(np.abs(rhs))
    assert np.allclose(inverse_fourier_transform(fourier_transform(f, fg), fg), f, atol=1e-13)


def test_kernel_specs(tmp_path):
    fg = FourierGrid(2.0, 32)
    assert kernel_from_spec({"exp-delta": {"a": 8}}).a == 8.0
    assert kernel_from_spec({"exp-delta": 5}).a == 5.0
    p = tmp_path / "k.csv"
    p.write_text("# x, value\n-1,0\n0,1\n1,0\n")
    k = kernel_from_spec({"tabulated": str(p)}, fg)
    assert k.grid_values(fg)[16] == 1.0
    assert k.grid_values(fg)[0] == 0.0
    for bad in [{"exp-delta": -1}, {"exp-delta": "x"}, {"gauss": 1}, {"tabulated": "missing.csv"}]:
        with pytest.raises(ConfigError):
            kernel_from_spec(bad, fg, tmp_path)
    with pytest.raises(DimensionError):
        fourier_symbol(KernelSpec.tabulated(np.ones(10)), fg)
    with pytest.raises(ValueError):
        KernelSpec.tabulated([1.0, np.inf])
