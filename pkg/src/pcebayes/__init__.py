"""Sampling-free Bayesian updating of polynomial chaos expansions.

Random vectors are carried as Hermite-chaos coefficient arrays over an
independent standard-Gaussian germ.  Bayesian updates are computed as
conditional-expectation maps of selectable polynomial degree (the linear
Gauss-Markov-Kalman filter, the quadratic update, general Galerkin bases)
acting directly on the coefficients, without sampling.
"""

from .hermite import (StructureTable, hermite_eval, multi_hermite_eval,
                      norm_sq, product_linearize)
from .moments import (MomentCache, SymTensor, covariance, cross_moment,
                      dumps_sym_tensor, hermite_product_expectation, mean,
                      sym_moment, variance)
from .multiindex import IndexSet, MultiIndex, unit_index
from .pce import (PceVector, germ_extend, loads_pce, dumps_pce, match_germ,
                  pce_eval, pce_eval_batch, read_pce, sample_paths, write_pce)
from .quadrature import (QuadratureDimensionError, gauss_hermite_1d,
                         required_level, tensor_grid)
from .update import (BasisDictionary, ConditionalProbability, GeneralBasisMap,
                     GramSystem, PolyMap, WarningRecord, apply_map,
                     apply_map_rv, bayes_update, build_gram_system,
                     conditional_probability, covariance_match, dumps_polymap,
                     general_bayes_update, indicator_projection, kalman_gain,
                     loads_polymap, pce_outer_product,
                     posterior_covariance_exact, qbu_closed_form,
                     read_polymap, solve_general_basis, solve_optimal_map,
                     write_polymap)

__version__ = "0.1.0"

__all__ = [
    "BasisDictionary", "ConditionalProbability", "GeneralBasisMap",
    "GramSystem", "IndexSet", "MomentCache", "MultiIndex", "PceVector",
    "PolyMap", "QuadratureDimensionError", "StructureTable", "SymTensor",
    "WarningRecord", "apply_map", "apply_map_rv", "bayes_update",
    "build_gram_system", "conditional_probability", "covariance",
    "covariance_match", "cross_moment", "dumps_pce", "dumps_polymap",
    "dumps_sym_tensor", "gauss_hermite_1d", "general_bayes_update",
    "germ_extend", "hermite_eval", "hermite_product_expectation",
    "indicator_projection", "kalman_gain", "loads_pce", "loads_polymap",
    "match_germ", "mean", "multi_hermite_eval", "norm_sq", "pce_eval",
    "pce_eval_batch", "pce_outer_product", "posterior_covariance_exact",
    "product_linearize", "qbu_closed_form", "read_pce", "read_polymap",
    "required_level", "sample_paths", "solve_general_basis",
    "solve_optimal_map", "sym_moment", "tensor_grid", "unit_index",
    "variance", "write_pce", "write_polymap",
]
