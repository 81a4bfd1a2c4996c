"""Deviations, best responses, move application and equilibrium verification."""

from __future__ import annotations

import heapq
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction

from .game import Game, State
from .potential import Mode, aggregates, potential_from_aggregates, resource_potential, resource_price
from .psi import PsiAggregate


class NoStrategyError(ValueError):
    """A player has no feasible strategy (e.g. unreachable target)."""


def _check_player(game: Game, u: int) -> None:
    if not 0 <= u < game.n:
        raise KeyError(f"unknown player {u!r}")


def _price_with(game: Game, aggs: Sequence[PsiAggregate], state: State, u: int, e: int,
                mode: Mode | str) -> Fraction:
    """Per-unit price of resource e for u, with u counted on e exactly once."""
    agg = aggs[e] if e in state[u] else aggs[e].insert(game.players[u].weight)
    return resource_price(game.resources[e].coeffs, agg, mode)


def strategy_cost(game: Game, aggs: Sequence[PsiAggregate], state: State, u: int,
                  s: Iterable[int], mode: Mode | str) -> Fraction:
    """Cost of u in ``(S_{-u}, s)`` given the aggregates of S."""
    w = game.players[u].weight
    return w * sum((_price_with(game, aggs, state, u, e, mode) for e in s), Fraction(0))


def deviation_cost(game: Game, state: State, u: int, s: frozenset[int], mode: Mode | str = Mode.PSI,
                   aggs: Sequence[PsiAggregate] | None = None) -> Fraction:
    """Cost of u after deviating to ``s``; pass ``aggs`` to reuse load aggregates of ``state``."""
    _check_player(game, u)
    if not is_valid_strategy(game, u, s):
        raise ValueError(f"invalid strategy for player {game.players[u].id!r}")
    if aggs is None:
        aggs = aggregates(game, state)
    return strategy_cost(game, aggs, state, u, s, mode)


def is_valid_strategy(game: Game, u: int, s: frozenset[int]) -> bool:
    p = game.players[u]
    if not p.is_network:
        return s in game.explicit_strategies(u)
    if not s or any(e not in game.edge_of_resource for e in s):
        return False
    try:
        path = game.path_of(s, u)
    except ValueError:
        return False
    nodes = [path[0].tail] + [e.head for e in path]
    return len(set(nodes)) == len(nodes)


def best_response(game: Game, state: State, u: int, mode: Mode | str = Mode.PSI,
                  aggs: Sequence[PsiAggregate] | None = None) -> tuple[frozenset[int], Fraction]:
    """A cost-minimising deviation of u, and its cost.

    Ties go to u's current strategy, then to the lexicographically smallest
    strategy (sorted resource ids for explicit players, edge-id sequence for
    network players). ``state`` may be the pseudo-state ``State.zero(game)``.
    """
    _check_player(game, u)
    if aggs is None:
        aggs = aggregates(game, state)
    if game.players[u].is_network:
        return _network_best_response(game, state, u, mode, aggs)
    options = game.explicit_strategies(u)
    if not options:
        raise NoStrategyError(f"player {game.players[u].id!r} has no strategy")
    current = state[u]
    best_s, best_c, best_key = None, None, None
    for s in options:
        c = strategy_cost(game, aggs, state, u, s, mode)
        key = (c, 0 if s == current else 1, game.strategy_key(s))
        if best_key is None or key < best_key:
            best_s, best_c, best_key = s, c, key
    return best_s, best_c


def _network_best_response(game: Game, state: State, u: int, mode: Mode | str,
                           aggs: Sequence[PsiAggregate]) -> tuple[frozenset[int], Fraction]:
    p = game.players[u]
    w = p.weight
    price: dict[str, Fraction] = {}
    for e_pos, edge in game.edge_of_resource.items():
        price[edge.id] = w * _price_with(game, aggs, state, u, e_pos, mode)
    # label-setting on (cost, edge-id sequence); prices are non-negative
    best: dict[str, tuple[Fraction, tuple[str, ...]]] = {p.source: (Fraction(0), ())}
    heap: list[tuple[Fraction, tuple[str, ...], str]] = [(Fraction(0), (), p.source)]
    done: set[str] = set()
    while heap:
        c, seq, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        if node == p.target:
            break
        for edge in game.out_edges.get(node, ()):
            if edge.head in done:
                continue
            label = (c + price[edge.id], seq + (edge.id,))
            if edge.head not in best or label < best[edge.head]:
                best[edge.head] = label
                heapq.heappush(heap, (label[0], label[1], edge.head))
    if p.target not in done:
        raise NoStrategyError(f"player {p.id!r}: no source-target path")
    cost, seq = best[p.target]
    edges = {e.id: e for e in game.network.edges}
    choice = frozenset(game.resource_index[edges[eid].resource] for eid in seq)
    current = state[u]
    if current and current != choice and is_valid_strategy(game, u, current):
        if strategy_cost(game, aggs, state, u, current, mode) == cost:
            return current, cost
    return choice, cost


def apply_move(state: State, u: int, s: frozenset[int], game: Game | None = None) -> State:
    """``(S_{-u}, s)``; when ``game`` is given the strategy is validated first."""
    if game is not None and not is_valid_strategy(game, u, s):
        raise ValueError(f"invalid strategy for player {game.players[u].id!r}")
    if state[u] == s:
        return state
    return state.replace(u, s)


class LoadTracker:
    """Mutable state plus per-resource Psi aggregates, updated move by move.

    Also keeps the Psi-game potential current by re-pricing only the resources
    a move touches.
    """

    def __init__(self, game: Game, state: State):
        self.game = game
        self.state = state
        self.aggs: list[PsiAggregate] = aggregates(game, state)
        self._res_pot = [resource_potential(r.coeffs, a) if a.count else Fraction(0)
                         for r, a in zip(game.resources, self.aggs)]
        self.potential = sum(self._res_pot, Fraction(0))

    def cost(self, u: int, mode: Mode | str) -> Fraction:
        return strategy_cost(self.game, self.aggs, self.state, u, self.state[u], mode)

    def deviation_cost(self, u: int, s: frozenset[int], mode: Mode | str) -> Fraction:
        return strategy_cost(self.game, self.aggs, self.state, u, s, mode)

    def best_response(self, u: int, mode: Mode | str) -> tuple[frozenset[int], Fraction]:
        return best_response(self.game, self.state, u, mode, self.aggs)

    def move(self, u: int, s: frozenset[int]) -> None:
        old = self.state[u]
        if old == s:
            return
        w = self.game.players[u].weight
        for e in old - s:
            self._reprice(e, self.aggs[e].remove(w))
        for e in s - old:
            self._reprice(e, self.aggs[e].insert(w))
        self.state = self.state.replace(u, s)

    def _reprice(self, e: int, agg: PsiAggregate) -> None:
        self.aggs[e] = agg
        new = resource_potential(self.game.resources[e].coeffs, agg) if agg.count else Fraction(0)
        self.potential += new - self._res_pot[e]
        self._res_pot[e] = new

    def consistent(self) -> bool:
        """True if the incremental aggregates match a rebuild from scratch."""
        fresh = aggregates(self.game, self.state)
        return fresh == self.aggs and potential_from_aggregates(self.game, fresh) == self.potential


@dataclass(frozen=True)
class EquilibriumReport:
    """Per-player improvement ratios and their maximum.

    A ratio is ``cost / best deviation cost`` (1 when no deviation improves);
    ``math.inf`` marks a zero-cost improving deviation.
    """

    ratios: dict[int, Fraction | float]
    rho_achieved: Fraction | float
    best_responses: dict[int, tuple[frozenset[int], Fraction]]

    def is_approximate(self, rho: Fraction | float) -> bool:
        return self.rho_achieved <= rho

    @property
    def unbounded(self) -> bool:
        return self.rho_achieved == math.inf


def improvement_ratio(current: Fraction, best: Fraction) -> Fraction | float:
    if best >= current:
        return Fraction(1)
    if best == 0:
        return math.inf
    return current / best


def verify_approx_equilibrium(game: Game, state: State, mode: Mode | str = Mode.PSI,
                              subset: Iterable[int] | None = None,
                              aggs: Sequence[PsiAggregate] | None = None) -> EquilibriumReport:
    """Largest factor by which some player in ``subset`` could cut its cost unilaterally."""
    if aggs is None:
        aggs = aggregates(game, state)
    members = range(game.n) if subset is None else sorted(set(subset))
    ratios: dict[int, Fraction | float] = {}
    brs = {}
    for u in members:
        _check_player(game, u)
        current = strategy_cost(game, aggs, state, u, state[u], mode)
        s, c = best_response(game, state, u, mode, aggs)
        brs[u] = (s, c)
        ratios[u] = improvement_ratio(current, c)
    rho = max(ratios.values(), default=Fraction(1))
    return EquilibriumReport(ratios, rho, brs)
