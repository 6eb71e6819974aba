"""Spectral statistics of the Laguerre unitary ensemble and its fixed-trace
and bounded-trace variants (Schmidt eigenvalues of random bipartite pure
states).
"""

__version__ = "0.1.0"

from .errors import (
    BranchError,
    ConfigError,
    ContractError,
    DomainError,
    NumericError,
    RangeError,
)

__all__ = [
    "__version__",
    "BranchError",
    "ConfigError",
    "ContractError",
    "DomainError",
    "NumericError",
    "RangeError",
]
