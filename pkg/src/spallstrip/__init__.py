"""Complex-time continuation of blow-up for u_t = u_xx + u^2 on (-1, 1)."""
from .continuation import EvolveOptions, TimePath, Trajectory, evolve, evolve_ode_mode
from .equilibrium import EigenPair, Equilibrium, find_equilibrium, leading_eigenpair
from .errors import ComputationError, DomainError
from .manifold import ManifoldExpansion, expand_graph, seed_initial
from .spatial import SpatialGrid, StateField

__all__ = [
    "ComputationError",
    "DomainError",
    "EigenPair",
    "Equilibrium",
    "EvolveOptions",
    "ManifoldExpansion",
    "SpatialGrid",
    "StateField",
    "TimePath",
    "Trajectory",
    "evolve",
    "evolve_ode_mode",
    "expand_graph",
    "find_equilibrium",
    "leading_eigenpair",
    "seed_initial",
]
