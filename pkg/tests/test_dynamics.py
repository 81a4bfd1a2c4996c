from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psieq.dynamics import (
    LoadTracker,
    NoStrategyError,
    apply_move,
    best_response,
    deviation_cost,
    improvement_ratio,
    verify_approx_equilibrium,
)
from psieq.game import Edge, Game, GameBuilder, Network, Player, Resource, State
from psieq.generate import GenSpec, grid_network, series_parallel
from psieq.oracle import all_simple_paths
from psieq.potential import Mode, aggregates, cost, potential

from .conftest import small_games

F = Fraction


def test_deviation_examples():
    game = (GameBuilder(1).resource("a", 0, 1).resource("b", 0, 1)
            .player("u", 1, ["a"], ["b"]).player("v", 1, ["b"]).build())
    state = State.from_indices(game, [0, 0])
    a, b = game.explicit_strategies(0)
    assert deviation_cost(game, state, 0, a) == cost(game, state, 0, Mode.PSI) == 1
    # joining b, which already holds weight 1: Psi_1({1, 1}) = 2
    assert deviation_cost(game, state, 0, b) == 2
    with pytest.raises(ValueError):
        deviation_cost(game, state, 0, frozenset({0, 1}))


def test_best_response_picks_cheaper_link():
    game = GameBuilder(1).resource("r1", 0, 1).resource("r2", 0, 2).player("u", 1, ["r2"], ["r1"]).build()
    s, c = best_response(game, State.from_indices(game, [0]), 0)
    assert game.strategy_key(s) == ("r1",) and c == 1


def test_best_response_from_zero_state_prices_solo():
    game = (GameBuilder(2).resource("a", 0, 0, 1).resource("b", 5)
            .player("u", 2, ["a"], ["b"]).player("v", 3, ["a"]).build())
    s, c = best_response(game, State.zero(game), 0)
    # alone on a: 2 * Psi_2({2}) = 2 * 8 = 16; on b: 2 * 5 = 10
    assert game.strategy_key(s) == ("b",) and c == 10


def test_ties_prefer_current_then_lexicographic():
    game = (GameBuilder(1).resource("a", 0, 1).resource("b", 0, 1).resource("c", 0, 1)
            .player("u", 1, ["c"], ["b"], ["a"]).build())
    state = State.from_indices(game, [1])
    assert best_response(game, state, 0)[0] == state[0]
    assert game.strategy_key(best_response(game, State.zero(game), 0)[0]) == ("a",)


def test_verify_examples():
    game = (GameBuilder(1).resource("a", 0, 1).resource("b", 0, 1)
            .player("u", 1, ["a"], ["b"]).player("v", 1, ["a"], ["b"]).build())
    split = State.from_indices(game, [0, 1])
    crowded = State.from_indices(game, [0, 0])
    assert verify_approx_equilibrium(game, split).rho_achieved == 1
    report = verify_approx_equilibrium(game, crowded)
    assert report.rho_achieved == 2
    assert not report.is_approximate(F(19, 10))
    assert verify_approx_equilibrium(game, crowded, subset=[]).rho_achieved == 1


def test_improvement_ratio_edges():
    assert improvement_ratio(F(3), F(3)) == 1
    assert improvement_ratio(F(3), F(1)) == 3
    assert improvement_ratio(F(3), F(0)) == math.inf


def test_apply_move_round_trip_and_noop():
    game = GameBuilder(1).resource("a", 0, 1).resource("b", 0, 1).player("u", 1, ["a"], ["b"]).build()
    state = State.from_indices(game, [0])
    a, b = game.explicit_strategies(0)
    moved = apply_move(state, 0, b, game)
    assert apply_move(moved, 0, a, game) == state
    assert apply_move(state, 0, a) is state
    with pytest.raises(ValueError):
        apply_move(state, 0, frozenset({0, 1}), game)


@given(small_games())
def test_best_response_is_exhaustive_minimum(gs):
    game, state = gs
    for mode in Mode:
        aggs = aggregates(game, state)
        for u in range(game.n):
            s, c = best_response(game, state, u, mode, aggs)
            costs = [deviation_cost(game, state, u, alt, mode, aggs) for alt in game.explicit_strategies(u)]
            assert c == min(costs) == deviation_cost(game, state, u, s, mode)


@given(small_games(), st.lists(st.tuples(st.integers(0, 10), st.integers(0, 10)), max_size=15))
def test_tracker_matches_rebuild(gs, moves):
    game, state = gs
    tracker = LoadTracker(game, state)
    for u, k in moves:
        u %= game.n
        options = game.explicit_strategies(u)
        tracker.move(u, options[k % len(options)])
        assert tracker.consistent()
    assert tracker.potential == potential(game, tracker.state)


@given(small_games(max_degree=1))
def test_linear_games_modes_agree(gs):
    game, state = gs
    for u in range(game.n):
        for alt in game.explicit_strategies(u):
            assert deviation_cost(game, state, u, alt, Mode.PSI) == deviation_cost(game, state, u, alt, Mode.WEIGHTED)


@given(small_games())
def test_weighted_move_is_psi_move_up_to_factorial(gs):
    game, state = gs
    df = math.factorial(game.degree)
    for u in range(game.n):
        c_w = cost(game, state, u, Mode.WEIGHTED)
        c_p = cost(game, state, u, Mode.PSI)
        for alt in game.explicit_strategies(u):
            d_w = deviation_cost(game, state, u, alt, Mode.WEIGHTED)
            d_p = deviation_cost(game, state, u, alt, Mode.PSI)
            if d_w < c_w:
                # a rho-move in the weighted game is at least a rho/d!-move in the Psi game
                assert c_p * d_w * df >= c_w * d_p


def _two_route_network(v_weight=2):
    edges = (Edge("top", "s", "t", "rt"), Edge("b1", "s", "m", "rb1"), Edge("b2", "m", "t", "rb2"))
    resources = (Resource("rt", (F(0), F(1))), Resource("rb1", (F(1), F(0))), Resource("rb2", (F(1), F(0))))
    players = (Player("u", F(1), None, "s", "t"), Player("v", F(v_weight), None, "s", "t"))
    return Game(1, resources, players, Network(("s", "m", "t"), edges))


def test_network_best_response_avoids_congestion():
    game = _two_route_network()
    state = State.from_mapping(game, {"u": ["top"], "v": ["top"]})
    s, c = best_response(game, state, 0)
    assert [e.id for e in game.path_of(s, 0)] == ["b1", "b2"]
    assert c == 2


@pytest.mark.parametrize("u_route", [["b1", "b2"], ["top"]])
def test_network_tie_keeps_current_route(u_route):
    # with two unit players both routes cost u exactly 2
    game = _two_route_network(v_weight=1)
    state = State.from_mapping(game, {"u": u_route, "v": ["top"]})
    s, c = best_response(game, state, 0)
    assert s == state[0] and c == 2


def test_network_no_path_raises():
    edges = (Edge("a", "s", "t", "r"),)
    game = Game(1, (Resource("r", (F(0), F(1))),), (Player("u", F(1), None, "t", "s"),),
                Network(("s", "t"), edges))
    with pytest.raises(NoStrategyError):
        best_response(game, State.zero(game), 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["grid", "sp"]), st.integers(1, 3), st.integers(1, 2))
def test_network_best_response_matches_path_enumeration(seed, family, n, degree):
    spec = GenSpec(n=n, degree=degree, weight_range=(1, 3))
    if family == "grid":
        game, state = grid_network(spec, 3, 3, seed)
    else:
        game, state = series_parallel(spec, 7, seed)
    aggs = aggregates(game, state)
    for mode in Mode:
        for u in range(game.n):
            s, c = best_response(game, state, u, mode, aggs)
            paths = all_simple_paths(game, u)
            assert s in paths
            assert c == min(deviation_cost(game, state, u, p, mode, aggs) for p in paths)
