"""Mixed-variable mesh adaptive direct search with Gaussian-process
surrogate-based categorical neighborhoods."""

from .distances import ConstraintMapConfig, d_f, d_g, g_plus
from .domain import Domain, Evaluation, Point, VariableSpec, decode_point, encode_point
from .kernels import KernelHyperparams, k_cat, k_mixed, k_qnt, kernel_matrix
from .neighborhood import Surrogates, build_neighborhood, default_m, order_components
from .solver import SolverConfig, run
from .surrogate import GPModel, fit, fit_optimized, log_marginal_likelihood, optimize_hyperparams, predict

__version__ = "0.1.0"

__all__ = [
    "Domain", "VariableSpec", "Point", "Evaluation", "encode_point", "decode_point",
    "KernelHyperparams", "k_qnt", "k_cat", "k_mixed", "kernel_matrix",
    "GPModel", "fit", "fit_optimized", "predict", "log_marginal_likelihood", "optimize_hyperparams",
    "ConstraintMapConfig", "d_f", "d_g", "g_plus",
    "Surrogates", "build_neighborhood", "order_components", "default_m",
    "SolverConfig", "run",
]
