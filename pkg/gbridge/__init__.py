# 广义高斯桥: 构造、模拟与数值验证
from .core import TimeGrid, SamplePath, SeedSpec, make_uniform_grid, increments, path_from_increments
from .errors import (BridgeError, InvalidArgumentError, UnsupportedError, NumericalDegeneracyError,
                     LinearDependenceError, DegenerateConditioningError, ConfigError)
from .models import (CovarianceModel, MeanFunction, brownian_motion, gaussian_martingale,
                     fractional_brownian_motion, generic_model, covariance_at, covariance_matrix,
                     increment_covariance, sample_path, sample_paths)
from .wiener import (GridFunction, ConditioningSet, GramFunction, preset_function, inner_product,
                     gram_function, wiener_integral, wiener_integrals)
from .orthogonal import (OrthogonalBridge, build_orthogonal, transform_path, transform_paths,
                         bridge_mean, bridge_covariance, bridge_covariance_matrix,
                         iterative_condition, multibridge_covariance)
from .canonical import (BridgeKernelPair, build_kernels, ell, ell_star, ell_star_ratio,
                        resolvent_residual, discrete_resolvent, kernel_energy,
                        canonical_transform, simulate_canonical_bridge, rn_log_density)
from .volterra import (FractionalOps, build_fractional_ops, fbm_normalizing_constant, apply_K,
                       apply_K_inv, kernel_matrix, covariance_from_kernel, volterra_bridge_transform,
                       volterra_bridge_paths)
from .harness import MomentReport, estimate_moments, convergence_sweep, worker_count
from .insider import (MarketSpec, PortfolioPath, adjusted_targets, insider_drift, optimal_portfolio,
                      log_wealth, delta_from_gram, insider_delta, conditional_delta, bs_example_delta,
                      expected_utility_gap, simulate_utility_gap)
