"""Synchronous and asynchronous explicit solvers for the 1D heat equation."""

from .core import (ContractError, Dirichlet, DomainError, NumericalDivergence,
                   PartitionSpec, Periodic, SolverParams, TemperatureField,
                   constant_init, cosine_init, derive_r, l2_norm,
                   linear_steady_state, total_heat)

__version__ = "0.1.0"
