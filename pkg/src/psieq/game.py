"""Weighted congestion games with polynomial latencies.

Players are addressed by position (``0..n-1``) and resources by position in
``Game.resources``; string ids are kept for I/O. A strategy is always a
``frozenset`` of resource positions, for explicit and network players alike.
Network games require every edge to carry its own resource, so a resource set
identifies a path uniquely.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

Scalar = Fraction
Strategy = frozenset

_RATIONAL = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(\d+)\s*)?$")


def parse_scalar(value: str | int | Fraction) -> Fraction:
    """Parse ``INT`` or ``INT/INT`` (positive denominator) into a Fraction.

    Plain integers are accepted as shorthand. Floats are rejected because they
    cannot be read back exactly.
    """
    if isinstance(value, bool):
        raise ValueError(f"malformed rational {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if not isinstance(value, str):
        raise ValueError(f"malformed rational {value!r}")
    match = _RATIONAL.match(value)
    if match is None:
        raise ValueError(f"malformed rational {value!r}")
    num, den = match.groups()
    if den is not None and int(den) == 0:
        raise ValueError(f"malformed rational {value!r}: zero denominator")
    return Fraction(int(num), int(den) if den is not None else 1)


def format_scalar(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Resource:
    id: str
    coeffs: tuple[Fraction, ...]

    def latency(self, load: Fraction) -> Fraction:
        total = Fraction(0)
        power = Fraction(1)
        for a in self.coeffs:
            total += a * power
            power *= load
        return total


@dataclass(frozen=True)
class Player:
    """A player with either explicit strategies or a source/target pair."""

    id: str
    weight: Fraction
    strategies: tuple[frozenset[str], ...] | None = None
    source: str | None = None
    target: str | None = None

    @property
    def is_network(self) -> bool:
        return self.strategies is None


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    resource: str


@dataclass(frozen=True)
class Network:
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]


@dataclass(frozen=True)
class Game:
    degree: int
    resources: tuple[Resource, ...]
    players: tuple[Player, ...]
    network: Network | None = None

    @property
    def n(self) -> int:
        return len(self.players)

    @cached_property
    def resource_index(self) -> dict[str, int]:
        return {r.id: i for i, r in enumerate(self.resources)}

    @cached_property
    def player_index(self) -> dict[str, int]:
        return {p.id: i for i, p in enumerate(self.players)}

    @cached_property
    def edge_of_resource(self) -> dict[int, Edge]:
        if self.network is None:
            return {}
        return {self.resource_index[e.resource]: e for e in self.network.edges
                if e.resource in self.resource_index}

    @cached_property
    def out_edges(self) -> dict[str, list[Edge]]:
        adj: dict[str, list[Edge]] = {}
        if self.network is not None:
            for node in self.network.nodes:
                adj[node] = []
            for e in self.network.edges:
                adj.setdefault(e.tail, []).append(e)
            for edges in adj.values():
                edges.sort(key=lambda e: e.id)
        return adj

    def explicit_strategies(self, u: int) -> tuple[frozenset[int], ...]:
        """Strategies of an explicit player as resource-position sets."""
        return self._explicit[u]

    @cached_property
    def _explicit(self) -> list[tuple[frozenset[int], ...]]:
        out = []
        for p in self.players:
            if p.strategies is None:
                out.append(())
            else:
                out.append(tuple(frozenset(self.resource_index[r] for r in s) for s in p.strategies))
        return out

    @property
    def is_explicit(self) -> bool:
        return all(not p.is_network for p in self.players)

    def strategy_key(self, s: frozenset[int]) -> tuple[str, ...]:
        """Lexicographic key used for deterministic tie-breaking."""
        return tuple(sorted(self.resources[e].id for e in s))

    def path_of(self, s: frozenset[int], u: int) -> list[Edge]:
        """Order the edges of a network strategy from source to target."""
        p = self.players[u]
        by_tail = {self.edge_of_resource[e].tail: self.edge_of_resource[e] for e in s}
        path, node = [], p.source
        while node != p.target and node in by_tail:
            edge = by_tail.pop(node)
            path.append(edge)
            node = edge.head
        if node != p.target or by_tail or len(path) != len(s):
            raise ValueError(f"strategy is not a source-target path for player {p.id!r}")
        return path


@dataclass(frozen=True)
class State:
    """One strategy per player, by player position.

    The pseudo-state in which nobody is placed is ``State.zero(game)``; every
    strategy in it is empty.
    """

    strategies: tuple[frozenset[int], ...]

    @classmethod
    def zero(cls, game: Game) -> State:
        return cls(tuple(frozenset() for _ in game.players))

    def replace(self, u: int, s: frozenset[int]) -> State:
        strategies = list(self.strategies)
        strategies[u] = frozenset(s)
        return State(tuple(strategies))

    def __getitem__(self, u: int) -> frozenset[int]:
        return self.strategies[u]

    def __len__(self) -> int:
        return len(self.strategies)

    @classmethod
    def from_indices(cls, game: Game, indices: Sequence[int]) -> State:
        return cls(tuple(game.explicit_strategies(u)[i] for u, i in enumerate(indices)))

    @classmethod
    def from_mapping(cls, game: Game, choices: Mapping[str, int | Sequence[str]]) -> State:
        """Build a state from ``player id -> explicit index | list of edge ids``."""
        edges = {e.id: e for e in game.network.edges} if game.network else {}
        out = []
        for u, p in enumerate(game.players):
            if p.id not in choices:
                raise ValueError(f"no strategy assigned to player {p.id!r}")
            choice = choices[p.id]
            if isinstance(choice, bool):
                raise ValueError(f"bad strategy for player {p.id!r}")
            if isinstance(choice, int):
                options = game.explicit_strategies(u)
                if not 0 <= choice < len(options):
                    raise ValueError(f"strategy index {choice} out of range for player {p.id!r}")
                out.append(options[choice])
            else:
                try:
                    out.append(frozenset(game.resource_index[edges[eid].resource] for eid in choice))
                except KeyError as exc:
                    raise ValueError(f"unknown edge {exc.args[0]!r} for player {p.id!r}") from None
        unknown = set(choices) - set(game.player_index)
        if unknown:
            raise ValueError(f"unknown players in state: {sorted(unknown)}")
        return cls(tuple(out))

    def to_mapping(self, game: Game) -> dict[str, int | list[str]]:
        out: dict[str, int | list[str]] = {}
        for u, p in enumerate(game.players):
            s = self.strategies[u]
            if p.is_network:
                out[p.id] = [e.id for e in game.path_of(s, u)]
            else:
                out[p.id] = game.explicit_strategies(u).index(s)
        return out


def _reachable(game: Game, source: str) -> set[str]:
    seen, stack = {source}, [source]
    while stack:
        node = stack.pop()
        for e in game.out_edges.get(node, ()):
            if e.head not in seen:
                seen.add(e.head)
                stack.append(e.head)
    return seen


def validate(game: Game) -> list[str]:
    """Return every invariant violation; an empty list means the game is well formed."""
    problems: list[str] = []
    if not isinstance(game.degree, int) or game.degree < 1:
        problems.append(f"degree must be an integer >= 1, got {game.degree!r}")
    seen: set[str] = set()
    for r in game.resources:
        if r.id in seen:
            problems.append(f"resource {r.id!r}: duplicate id")
        seen.add(r.id)
        if len(r.coeffs) != game.degree + 1:
            problems.append(f"resource {r.id!r}: expected {game.degree + 1} coefficients, got {len(r.coeffs)}")
        if any(a < 0 for a in r.coeffs):
            problems.append(f"resource {r.id!r}: coefficients must be non-negative")
        elif all(a == 0 for a in r.coeffs):
            problems.append(f"resource {r.id!r}: latency is identically zero (player costs may vanish)")
    if not game.players:
        problems.append("game has no players")
    ids: set[str] = set()
    for p in game.players:
        if p.id in ids:
            problems.append(f"player {p.id!r}: duplicate id")
        ids.add(p.id)
        if p.weight <= 0:
            problems.append(f"player {p.id!r}: weight must be positive")
        if p.strategies is not None:
            if not p.strategies:
                problems.append(f"player {p.id!r}: needs at least one strategy")
            for k, s in enumerate(p.strategies):
                if not s:
                    problems.append(f"player {p.id!r} strategy {k}: must be a non-empty set of resources")
                for rid in sorted(s - seen):
                    problems.append(f"player {p.id!r} strategy {k}: unknown resource {rid!r}")
        else:
            if game.network is None:
                problems.append(f"player {p.id!r}: source/target given but game has no network")
                continue
            nodes = set(game.network.nodes)
            if p.source not in nodes or p.target not in nodes:
                problems.append(f"player {p.id!r}: source or target is not a network node")
            elif p.source == p.target:
                problems.append(f"player {p.id!r}: source equals target (empty path)")
            elif p.target not in _reachable(game, p.source):
                problems.append(f"player {p.id!r}: no source-target path")
    if game.network is not None:
        nodes = set(game.network.nodes)
        if len(nodes) != len(game.network.nodes):
            problems.append("network: duplicate node ids")
        edge_ids: set[str] = set()
        carried: set[str] = set()
        for e in game.network.edges:
            if e.id in edge_ids:
                problems.append(f"edge {e.id!r}: duplicate id")
            edge_ids.add(e.id)
            if e.tail not in nodes or e.head not in nodes:
                problems.append(f"edge {e.id!r}: endpoint is not a network node")
            if e.resource not in seen:
                problems.append(f"edge {e.id!r}: unknown resource {e.resource!r}")
            elif e.resource in carried:
                problems.append(f"edge {e.id!r}: resource {e.resource!r} already carried by another edge")
            carried.add(e.resource)
    return problems


def validate_state(game: Game, state: State) -> list[str]:
    problems = []
    if len(state) != game.n:
        return [f"state has {len(state)} strategies for {game.n} players"]
    for u, p in enumerate(game.players):
        s = state[u]
        if p.is_network:
            if any(e not in game.edge_of_resource for e in s):
                problems.append(f"player {p.id!r}: strategy uses a resource that is not a network edge")
                continue
            try:
                path = game.path_of(s, u)
            except ValueError as exc:
                problems.append(str(exc))
                continue
            visited = [path[0].tail] + [e.head for e in path]
            if len(set(visited)) != len(visited):
                problems.append(f"player {p.id!r}: path is not simple")
        elif s not in game.explicit_strategies(u):
            problems.append(f"player {p.id!r}: strategy is not in the strategy space")
    return problems


def resource_load_multiset(game: Game, state: State, resource: str | int,
                           players: Iterable[int] | None = None) -> tuple[Fraction, ...]:
    """Weights of the players (optionally restricted to ``players``) using a resource."""
    if isinstance(resource, str):
        if resource not in game.resource_index:
            raise KeyError(f"unknown resource {resource!r}")
        e = game.resource_index[resource]
    else:
        e = resource
        if not 0 <= e < len(game.resources):
            raise KeyError(f"unknown resource position {resource!r}")
    members = range(game.n) if players is None else players
    return tuple(sorted(game.players[u].weight for u in members if e in state[u]))


def load_multisets(game: Game, state: State, players: Iterable[int] | None = None) -> list[list[Fraction]]:
    """All N_e(S) multisets at once, indexed by resource position."""
    loads: list[list[Fraction]] = [[] for _ in game.resources]
    members = range(game.n) if players is None else players
    for u in members:
        w = game.players[u].weight
        for e in state[u]:
            loads[e].append(w)
    return loads


@dataclass
class GameBuilder:
    """Small convenience for constructing games in code and tests."""

    degree: int
    resources: list[Resource] = field(default_factory=list)
    players: list[Player] = field(default_factory=list)

    def resource(self, rid: str, *coeffs) -> GameBuilder:
        self.resources.append(Resource(rid, tuple(parse_scalar(a) for a in coeffs)))
        return self

    def player(self, pid: str, weight, *strategies: Iterable[str]) -> GameBuilder:
        self.players.append(Player(pid, parse_scalar(weight), tuple(frozenset(s) for s in strategies)))
        return self

    def build(self) -> Game:
        return Game(self.degree, tuple(self.resources), tuple(self.players))
