"""Minimal-norm interpolation and regularization with neural-network kernels."""
from .estimator import MinimalNormInterpolator
from .kernel import KernelContext, evaluation_sup_norm, gram_matrix, kernel_eval
from .network import Architecture, ParamVector, forward, pack, unpack
from .regularizer import RegConfig, select, sweep
from .signs import enumerate_admissible, is_admissible
from .solver import Dataset, SolverOptions, solve_scalar, solve_vector_valued
from .supnorm import Combination, SearchConfig, estimate_sup

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "Combination",
    "Dataset",
    "KernelContext",
    "MinimalNormInterpolator",
    "ParamVector",
    "RegConfig",
    "SearchConfig",
    "SolverOptions",
    "enumerate_admissible",
    "estimate_sup",
    "evaluation_sup_norm",
    "forward",
    "gram_matrix",
    "is_admissible",
    "kernel_eval",
    "pack",
    "select",
    "solve_scalar",
    "solve_vector_valued",
    "sweep",
    "unpack",
]
