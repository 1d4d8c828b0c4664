"""Couplings between the prime factorisation of a uniform random integer,
the cycle type of a random permutation, their independent limit models and
the Poisson-Dirichlet process.
"""
from .kernels import BACKEND
from .number_theory import (
    ConfigError,
    DomainError,
    FactoredInteger,
    MertensMap,
    PrimeTables,
    factor,
    get_tables,
)
from .samplers import RandomSource

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "DomainError",
    "FactoredInteger",
    "MertensMap",
    "PrimeTables",
    "RandomSource",
    "factor",
    "get_tables",
]
