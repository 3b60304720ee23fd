import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lrdhilbert.errors import ConfigError, DimensionError
from lrdhilbert.grid import GridMeasure, grid_from_spec, inner_product, integrate, norm, uniform_grid


def test_uniform_grid_midpoints():
    g = uniform_grid(0, 1, 4)
    assert np.allclose(g.points, [0.125, 0.375, 0.625, 0.875])
    assert np.allclose(g.weights, 0.25)
    assert g.total_mass == pytest.approx(1.0)
    assert len(g) == g.size == 4


def test_grid_is_read_only():
    g = uniform_grid(0, 1, 3)
    with pytest.raises(ValueError):
        g.weights[0] = 2.0


def test_invalid_grids():
    with pytest.raises(ValueError):
        GridMeasure([0.0, 1.0], [1.0, 0.0])
    with pytest.raises(ValueError):
        GridMeasure([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(DimensionError):
        GridMeasure([0.0, 1.0], [1.0])
    with pytest.raises(DimensionError):
        GridMeasure([], [])


def test_grid_from_spec_forms():
    g = grid_from_spec({"uniform": [0, 2], "m": 4})
    assert g.total_mass == pytest.approx(2.0)
    g = grid_from_spec({"points": ["a", "b"], "weights": [1, 2]})
    assert g.size == 2 and g.points.dtype == object
    for bad in [{"uniform": [0, 1]}, {"points": [1, 2]}, [1, 2], {"uniform": [1, 0], "m": 2}, {}]:
        with pytest.raises(ConfigError):
            grid_from_spec(bad)


def test_norm_and_inner_product():
    g = GridMeasure([0, 1, 2], [0.5, 1.0, 2.0])
    f = np.array([1, 1j, 2])
    assert norm(f, g) ** 2 == pytest.approx(0.5 + 1.0 + 8.0)
    assert inner_product(f, f, g) == pytest.approx(norm(f, g) ** 2)
    assert integrate(np.ones(3), g) == pytest.approx(3.5)
    with pytest.raises(DimensionError):
        norm(np.ones(4), g)


@given(
    arrays(np.float64, 5, elements=st.floats(-10, 10)),
    arrays(np.float64, 5, elements=st.floats(-10, 10)),
    arrays(np.float64, 5, elements=st.floats(0.01, 5)),
)
@settings(max_examples=100)
def test_cauchy_schwarz_and_hermitian_symmetry(re, im, w):
    g = GridMeasure(np.arange(5), w)
    f = re + 1j * im
    h = im - 2j * re
    assert abs(inner_product(f, h, g)) <= norm(f, g) * norm(h, g) * (1 + 1e-12) + 1e-12
    assert inner_product(f, h, g) == pytest.approx(np.conj(inner_product(h, f, g)))
