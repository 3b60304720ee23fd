"""Long-range dependent linear processes in Hilbert space with normal-operator weights.

The process ``X_k = sum_j (j+1)^(-N) eps_{k-j}`` is simulated and analysed in
the spectral domain of ``N``, where every operator acts pointwise on a finite
weighted grid.  The package provides exact finite-``n`` second moments,
closed-form limit covariances and verification experiments that compare the two.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DimensionError, DomainError, LRDError, ModelError
from .grid import GridMeasure, grid_from_spec, inner_product, integrate, norm, uniform_grid
from .innovations import CovarianceKernel, InnovationSampler, build_sampler, empirical_covariance
from .limits import clt_covariance_operator, clt_limit_covariance, fclt_V, piecewise_C
from .operators import MultiplicationSymbol, NormalOperatorSpec, UnitarySpec, check_admissible, check_lrd
from .process import (
    ProcessConfig,
    exact_cross_covariance,
    exact_Sn_covariance,
    exact_zeta_cross_cov,
    simulate_ensemble,
    simulate_path,
)
from .specfun import beta, c_h, gen_geom_sum, limit_constant_c, log_gamma

__all__ = [
    "ConfigError", "DimensionError", "DomainError", "LRDError", "ModelError",
    "GridMeasure", "grid_from_spec", "inner_product", "integrate", "norm", "uniform_grid",
    "CovarianceKernel", "InnovationSampler", "build_sampler", "empirical_covariance",
    "clt_covariance_operator", "clt_limit_covariance", "fclt_V", "piecewise_C",
    "MultiplicationSymbol", "NormalOperatorSpec", "UnitarySpec", "check_admissible", "check_lrd",
    "ProcessConfig", "exact_cross_covariance", "exact_Sn_covariance", "exact_zeta_cross_cov",
    "simulate_ensemble", "simulate_path",
    "beta", "c_h", "gen_geom_sum", "limit_constant_c", "log_gamma",
]
