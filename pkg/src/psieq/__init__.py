"""Exact-arithmetic toolkit for approximate pure equilibria in weighted congestion games."""

from __future__ import annotations

__version__ = "0.1.0"

from .dynamics import (
    EquilibriumReport,
    LoadTracker,
    NoStrategyError,
    apply_move,
    best_response,
    deviation_cost,
    verify_approx_equilibrium,
)
from .game import Edge, Game, GameBuilder, Network, Player, Resource, State, validate, validate_state
from .io import InstanceError, parse_instance, serialize_instance
from .potential import Mode, cost, cost_psi, cost_weighted, partial_potential, potential, theta, xi
from .psi import PsiAggregate, psi, psi_vector
from .solver import GammaRangeError, MoveCapExceeded, SolverParams, audit_log, derive_params, gamma_max, solve

__all__ = [
    "Edge", "EquilibriumReport", "Game", "GameBuilder", "GammaRangeError", "InstanceError",
    "LoadTracker", "Mode", "MoveCapExceeded", "Network", "NoStrategyError", "Player", "PsiAggregate",
    "Resource", "SolverParams", "State", "apply_move", "audit_log", "best_response", "cost", "cost_psi",
    "cost_weighted", "derive_params", "deviation_cost", "gamma_max", "parse_instance", "partial_potential",
    "potential", "psi", "psi_vector", "serialize_instance", "solve", "theta", "validate", "validate_state",
    "verify_approx_equilibrium", "xi",
]
