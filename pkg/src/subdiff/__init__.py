"""Solvers for subdiffusion problems d_t^alpha u - Lap u = f discretized by
shifted-node convolution quadrature in time and linear finite elements in
space, with initial corrections and O(N log N) fast history summation."""

from ._kernels import backend_name, set_backend
from .fast_history import (BlockDecomposition, FastAlgorithmError,
                           FastHistoryState, FastParams, TalbotLevel,
                           block_decomposition, fast_history_sum, fast_weight,
                           kernel_F, kernel_e, level_for_lag, make_talbot_level,
                           quadrature_sum, talbot_derivative, talbot_point,
                           update_accumulator)
from .fem1d import (Indicator, Mesh1D, MeshError, TriDiag, assemble_mass,
                    assemble_stiffness, discrete_l2_norm, indicator_load,
                    l2_project, load_vector, ritz_project, thomas_solve)
from .mittag_leffler import mittag_leffler
from .params import ParameterDomainError, SchemeParams
from .stepping import (CN_FBDF2, CORRECTED, CRANK_NICOLSON, FAST1, FAST2,
                       PLAIN, STANDARD, DiscreteProblem, SchemeError,
                       SolutionHistory, SpatialSystem, build_weights,
                       error_series, observed_rate, solve, solve_cn_fbdf2,
                       step_system_matrix)
from .weights import (WeightTable, combined_cn_fbdf2_weights, fbdf2_weights,
                      sftr_weights, weights_series_oracle)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
