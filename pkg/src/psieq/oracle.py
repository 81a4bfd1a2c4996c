"""Brute-force ground truth for small explicit-strategy games."""

from __future__ import annotations

import itertools
import math
import os
import random
from collections.abc import Iterator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx

from .dynamics import strategy_cost, verify_approx_equilibrium
from .game import Game, State
from .potential import Mode, aggregates, cost_psi, partial_potential_full, potential, theta

DEFAULT_CAP = 200_000


class EnumerationError(ValueError):
    pass


class DegenerateGameError(ValueError):
    pass


def state_count(game: Game) -> int:
    return math.prod(len(game.explicit_strategies(u)) for u in range(game.n))


def _check_enumerable(game: Game, cap: int) -> None:
    if not game.is_explicit:
        raise EnumerationError("state enumeration needs explicit strategy spaces")
    total = state_count(game)
    if total > cap:
        raise EnumerationError(f"{total} states exceed the enumeration cap {cap}")


def enumerate_states(game: Game, cap: int = DEFAULT_CAP) -> Iterator[State]:
    """Every state exactly once, in mixed-radix order over strategy indices."""
    _check_enumerable(game, cap)
    spaces = [game.explicit_strategies(u) for u in range(game.n)]
    for combo in itertools.product(*spaces):
        yield State(tuple(combo))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("PSIEQ_THREADS", "1")))
    except ValueError:
        return 1


def _ratios_chunk(args):
    game, states, mode = args
    return [verify_approx_equilibrium(game, s, mode).rho_achieved for s in states]


def equilibrium_ratios(game: Game, mode: Mode | str = Mode.PSI, cap: int = DEFAULT_CAP) -> list[tuple[State, Fraction | float]]:
    """``(state, rho_achieved)`` for every state; parallel over ``PSIEQ_THREADS`` processes."""
    states = list(enumerate_states(game, cap))
    workers = _threads()
    if workers == 1 or len(states) < 64:
        ratios = _ratios_chunk((game, states, mode))
    else:
        size = -(-len(states) // workers)
        chunks = [(game, states[i:i + size], mode) for i in range(0, len(states), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            ratios = [r for part in pool.map(_ratios_chunk, chunks) for r in part]
    return list(zip(states, ratios))


def exact_equilibria(game: Game, mode: Mode | str = Mode.PSI, rho: Fraction | float = 1,
                     cap: int = DEFAULT_CAP) -> list[State]:
    """All rho-approximate equilibria (``rho = math.inf`` returns every state)."""
    if rho == math.inf:
        return list(enumerate_states(game, cap))
    return [s for s, r in equilibrium_ratios(game, mode, cap) if r <= rho]


def min_potential_state(game: Game, cap: int = DEFAULT_CAP) -> tuple[State, Fraction]:
    """Global minimiser of the potential; the first in enumeration order on ties."""
    best: tuple[State, Fraction] | None = None
    for s in enumerate_states(game, cap):
        phi = potential(game, s)
        if best is None or phi < best[1]:
            best = (s, phi)
    return best


def measure_stretch(game: Game, rho: Fraction, cap: int = DEFAULT_CAP) -> Fraction:
    """Max of ``Phi(S) / Phi(S*)`` over rho-approximate equilibria S of the Psi-game."""
    _, phi_star = min_potential_state(game, cap)
    if phi_star == 0:
        raise DegenerateGameError("minimum potential is zero; stretch undefined")
    eqs = exact_equilibria(game, Mode.PSI, rho, cap)
    return max(potential(game, s) for s in eqs) / phi_star


@dataclass
class DynamicsGraph:
    """Improvement-move graph over all states (node ``i`` is the i-th enumerated state)."""

    states: list[State]
    graph: nx.DiGraph
    sinks: list[int]
    acyclic: bool
    cycle_witness: list[tuple[int, int, frozenset[int]]] | None = None

    @property
    def edge_count(self) -> int:
        return self.graph.number_of_edges()


def dynamics_graph(game: Game, mode: Mode | str = Mode.PSI, cap: int = DEFAULT_CAP) -> DynamicsGraph:
    """Build the full Nash-dynamics graph under ``mode`` costs and look for a cycle.

    A cycle witness is a list of ``(state index, player, new strategy)`` moves
    that returns to its starting state.
    """
    states = list(enumerate_states(game, cap))
    index = {s: i for i, s in enumerate(states)}
    g = nx.DiGraph()
    g.add_nodes_from(range(len(states)))
    for i, s in enumerate(states):
        aggs = aggregates(game, s)
        for u in range(game.n):
            now = strategy_cost(game, aggs, s, u, s[u], mode)
            for alt in game.explicit_strategies(u):
                if alt != s[u] and strategy_cost(game, aggs, s, u, alt, mode) < now:
                    g.add_edge(i, index[s.replace(u, alt)], player=u, strategy=alt)
    sinks = [i for i in g.nodes if g.out_degree(i) == 0]
    witness = None
    try:
        cycle = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle is not None:
        witness = [(a, g.edges[a, b]["player"], g.edges[a, b]["strategy"]) for a, b in cycle]
    return DynamicsGraph(states, g, sinks, cycle is None, witness)


def local_potential_minima(game: Game, cap: int = DEFAULT_CAP) -> list[int]:
    """Indices of states where no single deviation lowers the potential."""
    out = []
    for i, s in enumerate(enumerate_states(game, cap)):
        phi = potential(game, s)
        if all(potential(game, s.replace(u, alt)) >= phi
               for u in range(game.n) for alt in game.explicit_strategies(u)):
            out.append(i)
    return out


@dataclass
class PartialStretchReport:
    samples: int = 0
    comparisons: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def check_partial_stretch(game: Game, rho: Fraction, samples: int, seed: int,
                          cap: int = DEFAULT_CAP) -> PartialStretchReport:
    """Sample (R, S) with S a rho-approximate equilibrium for R and compare against
    every S* that agrees with S outside R: ``Phi_R(S) <= theta(rho) Phi_R(S*)``.
    """
    rng = random.Random(seed)
    bound = theta(game.degree, Fraction(rho))
    states = list(enumerate_states(game, cap))
    report = PartialStretchReport()
    eligible: dict[frozenset[int], list[State]] = {}
    for _ in range(samples):
        # non-empty R; R = {} is vacuous. Any exact equilibrium qualifies, so eligible[r] is never empty.
        mask = rng.randrange(1, 2**game.n)
        r = frozenset(u for u in range(game.n) if mask >> u & 1)
        if r not in eligible:
            eligible[r] = [s for s in states
                           if verify_approx_equilibrium(game, s, Mode.PSI, r).rho_achieved <= rho]
        s = rng.choice(eligible[r])
        report.samples += 1
        lhs = partial_potential_full(game, s, r)
        members = sorted(r)
        for combo in itertools.product(*(game.explicit_strategies(u) for u in members)):
            other = s
            for u, alt in zip(members, combo):
                other = other.replace(u, alt)
            report.comparisons += 1
            if lhs > bound * partial_potential_full(game, other, r):
                report.violations.append(f"R={members} S={s.strategies} S*={other.strategies}")
    return report


def all_simple_paths(game: Game, u: int) -> list[frozenset[int]]:
    """Every simple source-target path of a network player, as resource sets."""
    p = game.players[u]
    g = nx.MultiDiGraph()
    g.add_nodes_from(game.network.nodes)
    for e in game.network.edges:
        g.add_edge(e.tail, e.head, key=e.id, resource=e.resource)
    out = []
    for path in nx.all_simple_edge_paths(g, p.source, p.target):
        out.append(frozenset(game.resource_index[g.edges[a, b, k]["resource"]] for a, b, k in path))
    return out


def phase_last_move_bound(game: Game, movelog) -> list[str]:
    """Replay a move log and check ``Phi_R(S^i) <= sum of Psi-costs just after each
    mover's last move in phase i`` for every phase ``i >= 1``.
    """
    last: dict[int, dict[int, Fraction]] = {}
    ends: dict[int, State] = {}
    state = movelog.initial_state
    for rec in movelog.records:
        state = state.replace(rec.player, rec.to_strategy)
        last.setdefault(rec.phase, {})[rec.player] = cost_psi(game, state, rec.player)
        ends[rec.phase] = state
    problems = []
    for phase, costs in sorted(last.items()):
        if phase == 0:
            continue
        lhs = partial_potential_full(game, ends[phase], costs)
        rhs = sum(costs.values(), Fraction(0))
        if lhs > rhs:
            problems.append(f"phase {phase}: {lhs} > {rhs}")
    return problems
