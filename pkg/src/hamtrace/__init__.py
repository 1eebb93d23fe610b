"""Trace formulas, spectral oracles and stability criteria for linear Hamiltonian
and Sturm-Liouville boundary value problems."""
from .core import (BoundaryData, ConfigError, DegenerateError, DomainError, MatrixPath,
                   StandardSymplecticForm, builtin_path, constant_path, function_path,
                   matrix_path_eval, parse_problem_config, standard_J, tabulated_path,
                   zero_path)

__version__ = "0.1.0"

__all__ = [
    "BoundaryData", "ConfigError", "DegenerateError", "DomainError", "MatrixPath",
    "StandardSymplecticForm", "builtin_path", "constant_path", "function_path",
    "matrix_path_eval", "parse_problem_config", "standard_J", "tabulated_path", "zero_path",
]
