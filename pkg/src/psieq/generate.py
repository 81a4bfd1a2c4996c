"""Seeded instance generators.

Distribution of ``random_game``: integer weights uniform in ``weight_range``
(or, with ``rational_weights``, a uniform numerator over a uniform
denominator in ``1..4``); each coefficient is non-zero with probability
``density`` and then uniform in ``coeff_range``, and a resource that drew no
positive coefficient gets one at a uniformly chosen degree. Each player gets
``strategies`` distinct strategies, each a uniform non-empty subset of the
resources.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .game import Edge, Game, Network, Player, Resource, State


class InfeasibleSpecError(ValueError):
    pass


@dataclass(frozen=True)
class GenSpec:
    n: int = 3
    degree: int = 1
    resources: int = 3
    strategies: int = 2
    weight_range: tuple[int, int] = (1, 3)
    coeff_range: tuple[int, int] = (1, 3)
    density: float = 0.6
    rational_weights: bool = False

    def check(self) -> None:
        if self.n < 1 or self.degree < 1 or self.resources < 1 or self.strategies < 1:
            raise InfeasibleSpecError("n, degree, resources and strategies must be positive")
        lo, hi = self.weight_range
        if not 1 <= lo <= hi:
            raise InfeasibleSpecError("weight range must satisfy 1 <= lo <= hi")
        lo, hi = self.coeff_range
        if not 1 <= lo <= hi:
            raise InfeasibleSpecError("coefficient range must satisfy 1 <= lo <= hi")
        if not 0 <= self.density <= 1:
            raise InfeasibleSpecError("density must lie in [0, 1]")


def _weight(rng: random.Random, spec: GenSpec) -> Fraction:
    w = Fraction(rng.randint(*spec.weight_range))
    if spec.rational_weights:
        w /= rng.randint(1, 4)
    return w


def _coeffs(rng: random.Random, spec: GenSpec) -> tuple[Fraction, ...]:
    coeffs = [Fraction(rng.randint(*spec.coeff_range)) if rng.random() < spec.density else Fraction(0)
              for _ in range(spec.degree + 1)]
    if not any(coeffs):
        coeffs[rng.randrange(spec.degree + 1)] = Fraction(rng.randint(*spec.coeff_range))
    return tuple(coeffs)


def random_game(spec: GenSpec, seed: int) -> tuple[Game, State]:
    """Random explicit-strategy game and a uniformly random initial state."""
    spec.check()
    if spec.strategies > 2**spec.resources - 1:
        raise InfeasibleSpecError(f"{spec.resources} resources admit at most {2**spec.resources - 1} strategies")
    rng = random.Random(seed)
    rids = [f"e{i}" for i in range(spec.resources)]
    resources = tuple(Resource(r, _coeffs(rng, spec)) for r in rids)
    players = []
    for u in range(spec.n):
        masks = rng.sample(range(1, 2**spec.resources), spec.strategies)
        strategies = tuple(frozenset(r for i, r in enumerate(rids) if mask >> i & 1) for mask in masks)
        players.append(Player(f"u{u}", _weight(rng, spec), strategies))
    game = Game(spec.degree, resources, tuple(players))
    state = State.from_indices(game, [rng.randrange(spec.strategies) for _ in range(spec.n)])
    return game, state


def parallel_links(spec: GenSpec, links: int, seed: int) -> tuple[Game, State]:
    """``links`` resources, every player picks exactly one of them."""
    spec.check()
    if links < 1:
        raise InfeasibleSpecError("need at least one link")
    rng = random.Random(seed)
    rids = [f"l{i}" for i in range(links)]
    resources = tuple(Resource(r, _coeffs(rng, spec)) for r in rids)
    options = tuple(frozenset([r]) for r in rids)
    players = tuple(Player(f"u{u}", _weight(rng, spec), options) for u in range(spec.n))
    game = Game(spec.degree, resources, players)
    state = State.from_indices(game, [rng.randrange(links) for _ in range(spec.n)])
    return game, state


def _network_game(spec: GenSpec, rng: random.Random, nodes: list[str], arcs: list[tuple[str, str]],
                  endpoints: list[tuple[str, str]]) -> tuple[Game, State]:
    edges = tuple(Edge(f"a{i}", t, h, f"r{i}") for i, (t, h) in enumerate(arcs))
    resources = tuple(Resource(e.resource, _coeffs(rng, spec)) for e in edges)
    players = tuple(Player(f"u{u}", _weight(rng, spec), None, s, t) for u, (s, t) in enumerate(endpoints))
    game = Game(spec.degree, resources, players, Network(tuple(nodes), edges))
    paths = {}
    for u, p in enumerate(players):
        seq = random_path(game, p.source, p.target, rng)
        paths[p.id] = [e.id for e in seq]
    return game, State.from_mapping(game, paths)


def random_path(game: Game, source: str, target: str, rng: random.Random) -> list[Edge]:
    """Randomised depth-first search for a simple source-target path."""
    stack = [(source, [], {source})]
    while stack:
        node, path, seen = stack.pop()
        if node == target:
            return path
        nxt = [e for e in game.out_edges.get(node, ()) if e.head not in seen]
        rng.shuffle(nxt)
        for e in nxt:
            stack.append((e.head, path + [e], seen | {e.head}))
    raise InfeasibleSpecError(f"no path from {source} to {target}")


def grid_network(spec: GenSpec, rows: int, cols: int, seed: int) -> tuple[Game, State]:
    """Directed ``rows x cols`` grid with right and down arcs.

    Each player gets a random source and a random target strictly below-right
    of it in the product order, so a path always exists.
    """
    spec.check()
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise InfeasibleSpecError("grid needs at least two nodes")
    rng = random.Random(seed)
    name = "v{}_{}".format
    nodes = [name(i, j) for i in range(rows) for j in range(cols)]
    arcs = [(name(i, j), name(i, j + 1)) for i in range(rows) for j in range(cols - 1)]
    arcs += [(name(i, j), name(i + 1, j)) for i in range(rows - 1) for j in range(cols)]
    endpoints = []
    for _ in range(spec.n):
        while True:
            i, j = rng.randrange(rows), rng.randrange(cols)
            k, l = rng.randint(i, rows - 1), rng.randint(j, cols - 1)
            if (i, j) != (k, l):
                break
        endpoints.append((name(i, j), name(k, l)))
    return _network_game(spec, rng, nodes, arcs, endpoints)


def series_parallel(spec: GenSpec, operations: int, seed: int) -> tuple[Game, State]:
    """Start from one arc ``s -> t`` and apply random series/parallel expansions.

    A series step subdivides an arc with a fresh node; a parallel step
    duplicates an arc. All players route from ``s`` to ``t``.
    """
    spec.check()
    rng = random.Random(seed)
    nodes = ["s", "t"]
    arcs = [("s", "t")]
    for k in range(operations):
        i = rng.randrange(len(arcs))
        tail, head = arcs[i]
        if rng.random() < 0.5:
            mid = f"x{k}"
            nodes.append(mid)
            arcs[i] = (tail, mid)
            arcs.append((mid, head))
        else:
            arcs.append((tail, head))
    return _network_game(spec, rng, nodes, arcs, [("s", "t")] * spec.n)
