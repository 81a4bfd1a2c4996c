"""JSON instance format, state files, and report encoding.

Instance::

    {"degree": 1,
     "resources": [{"id": "e1", "coeffs": ["0", "1"]}, ...],
     "players": [{"id": "u1", "weight": "3/2", "strategies": [["e1"], ["e2", "e3"]]},
                 {"id": "u2", "weight": "1", "source": "s", "target": "t"}],
     "network": {"nodes": ["s", "t"], "edges": [{"id": "a", "from": "s", "to": "t", "resource": "e1"}]},
     "initial_state": {"u1": 0, "u2": ["a"]}}

``network`` and ``initial_state`` are optional. Rationals are ``INT`` or
``INT/INT`` strings; bare JSON integers are accepted.
"""

from __future__ import annotations

import json
import math
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Any

from .game import Edge, Game, Network, Player, Resource, State, format_scalar, parse_scalar, validate


class InstanceError(ValueError):
    """Malformed or invalid instance; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def _decode(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError([f"line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None


def _scalar(value, where: str, errors: list[str]) -> Fraction | None:
    try:
        return parse_scalar(value)
    except ValueError as exc:
        errors.append(f"{where}: {exc}")
        return None


def game_from_dict(data: Any) -> Game:
    errors: list[str] = []
    if not isinstance(data, dict):
        raise InstanceError(["top level must be a JSON object"])
    for key in ("degree", "resources", "players"):
        if key not in data:
            errors.append(f"missing key {key!r}")
    if errors:
        raise InstanceError(errors)
    degree = data["degree"]
    if not isinstance(degree, int) or isinstance(degree, bool):
        errors.append("degree: must be an integer")
        degree = 0

    resources = []
    for i, r in enumerate(data["resources"] or []):
        where = f"resources[{i}]"
        if not isinstance(r, dict) or "id" not in r or "coeffs" not in r:
            errors.append(f"{where}: needs 'id' and 'coeffs'")
            continue
        coeffs = [_scalar(a, f"{where}.coeffs[{k}]", errors) for k, a in enumerate(r["coeffs"])]
        resources.append(Resource(str(r["id"]), tuple(a for a in coeffs if a is not None)))

    players = []
    for i, p in enumerate(data["players"] or []):
        where = f"players[{i}]"
        if not isinstance(p, dict) or "id" not in p or "weight" not in p:
            errors.append(f"{where}: needs 'id' and 'weight'")
            continue
        weight = _scalar(p["weight"], f"{where}.weight", errors)
        if weight is None:
            continue
        if "strategies" in p:
            strategies = []
            for k, s in enumerate(p["strategies"]):
                if not isinstance(s, list) or not s:
                    errors.append(f"{where}.strategies[{k}]: must be a non-empty set of resources")
                    continue
                if len(set(s)) != len(s):
                    errors.append(f"{where}.strategies[{k}]: duplicate resource ids")
                    continue
                strategies.append(frozenset(str(x) for x in s))
            players.append(Player(str(p["id"]), weight, tuple(strategies)))
        elif "source" in p and "target" in p:
            players.append(Player(str(p["id"]), weight, None, str(p["source"]), str(p["target"])))
        else:
            errors.append(f"{where}: needs 'strategies' or 'source'/'target'")

    network = None
    if data.get("network") is not None:
        net = data["network"]
        try:
            edges = tuple(Edge(str(e["id"]), str(e["from"]), str(e["to"]), str(e["resource"]))
                          for e in net.get("edges", []))
            network = Network(tuple(str(v) for v in net.get("nodes", [])), edges)
        except (KeyError, TypeError, AttributeError) as exc:
            errors.append(f"network: malformed ({exc})")
    if errors:
        raise InstanceError(errors)
    game = Game(degree, tuple(resources), tuple(players), network)
    problems = validate(game)
    if problems:
        raise InstanceError(problems)
    return game


def parse_instance(text: str) -> Game:
    """Parse and validate an instance; raises InstanceError listing every problem."""
    return game_from_dict(_decode(text))


def parse_instance_with_state(text: str) -> tuple[Game, State | None]:
    data = _decode(text)
    game = game_from_dict(data)
    state = None
    if isinstance(data, dict) and data.get("initial_state") is not None:
        state = state_from_mapping(game, data["initial_state"])
    return game, state


def state_from_mapping(game: Game, mapping: Any) -> State:
    from .game import validate_state

    if not isinstance(mapping, dict):
        raise InstanceError(["state must be an object mapping player id to strategy"])
    try:
        state = State.from_mapping(game, mapping)
    except ValueError as exc:
        raise InstanceError([str(exc)]) from None
    problems = validate_state(game, state)
    if problems:
        raise InstanceError(problems)
    return state


def game_to_dict(game: Game) -> dict:
    out: dict[str, Any] = {
        "degree": game.degree,
        "resources": [{"id": r.id, "coeffs": [format_scalar(a) for a in r.coeffs]} for r in game.resources],
        "players": [],
    }
    for p in game.players:
        entry: dict[str, Any] = {"id": p.id, "weight": format_scalar(p.weight)}
        if p.is_network:
            entry["source"], entry["target"] = p.source, p.target
        else:
            entry["strategies"] = [sorted(s) for s in p.strategies]
        out["players"].append(entry)
    if game.network is not None:
        out["network"] = {
            "nodes": list(game.network.nodes),
            "edges": [{"id": e.id, "from": e.tail, "to": e.head, "resource": e.resource}
                      for e in game.network.edges],
        }
    return out


def serialize_instance(game: Game, state: State | None = None) -> str:
    data = game_to_dict(game)
    if state is not None:
        data["initial_state"] = state.to_mapping(game)
    return json.dumps(data, indent=2) + "\n"


def rational(x: Fraction | float | int) -> dict[str, str] | str:
    """Exact string plus a 30-significant-digit decimal; infinities become ``"unbounded"``."""
    if isinstance(x, float) and math.isinf(x):
        return "unbounded"
    x = Fraction(x)
    with localcontext() as ctx:
        ctx.prec = 30
        approx = Decimal(x.numerator) / Decimal(x.denominator)
    return {"exact": format_scalar(x), "decimal": format(approx, "g")}


def read_rational(value: Any) -> Fraction | float:
    if value == "unbounded":
        return math.inf
    if isinstance(value, dict):
        value = value["exact"]
    return parse_scalar(value)


def strategy_ids(game: Game, s: frozenset[int]) -> list[str]:
    return sorted(game.resources[e].id for e in s)
