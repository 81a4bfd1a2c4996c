from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given

from psieq.game import (
    Edge,
    Game,
    GameBuilder,
    Network,
    Player,
    Resource,
    State,
    format_scalar,
    load_multisets,
    parse_scalar,
    resource_load_multiset,
    validate,
    validate_state,
)

from .conftest import small_games

F = Fraction


@pytest.mark.parametrize("text,value", [("3/2", F(3, 2)), ("4", F(4)), (" 6/4 ", F(3, 2)), (7, F(7)), ("-1/3", F(-1, 3))])
def test_parse_scalar(text, value):
    assert parse_scalar(text) == value


@pytest.mark.parametrize("bad", ["1/0", "1.5", "a", "", "1/-2", 1.5, True, None])
def test_parse_scalar_rejects(bad):
    with pytest.raises(ValueError):
        parse_scalar(bad)


def test_format_scalar_is_canonical():
    assert format_scalar(F(6, 4)) == "3/2"
    assert format_scalar(F(5)) == "5"


def _one_player(weight="1"):
    return GameBuilder(1).resource("e", 0, 1).player("u", weight, ["e"]).build()


def test_well_formed_game_has_no_violations():
    assert validate(_one_player()) == []


def test_zero_weight_flagged():
    problems = validate(_one_player("0"))
    assert any("weight must be positive" in p for p in problems)


def test_assorted_violations():
    game = Game(
        2,
        (Resource("e", (F(0), F(1))), Resource("e", (F(0), F(0), F(0))), Resource("f", (F(-1), F(1), F(0)))),
        (Player("u", F(1), (frozenset(), frozenset({"zz"}))), Player("u", F(1), ())),
    )
    text = "\n".join(validate(game))
    for needle in ("duplicate id", "expected 3 coefficients", "identically zero", "non-negative",
                   "non-empty set of resources", "unknown resource 'zz'", "needs at least one strategy"):
        assert needle in text


def _diamond():
    edges = (Edge("a", "s", "x", "ra"), Edge("b", "x", "t", "rb"), Edge("c", "s", "t", "rc"))
    resources = tuple(Resource(e.resource, (F(0), F(1))) for e in edges)
    return edges, resources


def test_unreachable_target_flagged():
    edges, resources = _diamond()
    net = Network(("s", "x", "t", "z"), edges)
    game = Game(1, resources, (Player("u", F(1), None, "s", "z"),), net)
    assert any("no source-target path" in p for p in validate(game))


def test_network_edge_resource_checks():
    edges, resources = _diamond()
    edges += (Edge("d", "x", "t", "ra"), Edge("e", "x", "t", "nope"))
    game = Game(1, resources, (Player("u", F(1), None, "s", "t"),), Network(("s", "x", "t"), edges))
    text = "\n".join(validate(game))
    assert "already carried" in text
    assert "unknown resource 'nope'" in text


def test_path_of_orders_edges_and_rejects_non_paths():
    edges, resources = _diamond()
    game = Game(1, resources, (Player("u", F(1), None, "s", "t"),), Network(("s", "x", "t"), edges))
    idx = game.resource_index
    path = game.path_of(frozenset({idx["rb"], idx["ra"]}), 0)
    assert [e.id for e in path] == ["a", "b"]
    with pytest.raises(ValueError):
        game.path_of(frozenset({idx["rb"]}), 0)
    state = State.from_mapping(game, {"u": ["a", "b"]})
    assert validate_state(game, state) == []
    assert state.to_mapping(game) == {"u": ["a", "b"]}


def test_load_multiset_examples():
    game = (GameBuilder(1).resource("e", 0, 1).resource("f", 0, 1).resource("g", 0, 1)
            .player("a", 2, ["e"]).player("b", 3, ["e"]).player("c", 5, ["f"]).build())
    state = State.from_indices(game, [0, 0, 0])
    assert resource_load_multiset(game, state, "e") == (2, 3)
    assert resource_load_multiset(game, state, "g") == ()
    unit = GameBuilder(1).resource("e", 0, 1).player("a", 1, ["e"]).player("b", 1, ["e"]).build()
    assert resource_load_multiset(unit, State.from_indices(unit, [0, 0]), "e") == (1, 1)
    with pytest.raises(KeyError):
        resource_load_multiset(game, state, "missing")


def test_state_mapping_errors():
    game = _one_player()
    with pytest.raises(ValueError):
        State.from_mapping(game, {})
    with pytest.raises(ValueError):
        State.from_mapping(game, {"u": 3})
    with pytest.raises(ValueError):
        State.from_mapping(game, {"u": 0, "ghost": 0})


@given(small_games())
def test_deviation_changes_loads_only_on_symmetric_difference(gs):
    game, state = gs
    before = load_multisets(game, state)
    for u in range(game.n):
        for alt in game.explicit_strategies(u):
            after = load_multisets(game, state.replace(u, alt))
            changed = {e for e in range(len(game.resources)) if sorted(before[e]) != sorted(after[e])}
            assert changed <= state[u] ^ alt
