from __future__ import annotations

import dataclasses
from fractions import Fraction

import pytest
from hypothesis import given, settings

from psieq.dynamics import verify_approx_equilibrium
from psieq.game import GameBuilder, State
from psieq.oracle import exact_equilibria, phase_last_move_bound
from psieq.potential import SQRT5_UPPER, Mode, theta
from psieq.solver import (
    GammaRangeError,
    MoveCapExceeded,
    PhaseContext,
    audit_log,
    ceil_log2,
    derive_params,
    gamma_max,
    select_mover,
    solve,
)

from .conftest import small_games

F = Fraction


def _ladder_game():
    # one player, solo costs 1 (on a) and 8 (on b), starting on b
    game = GameBuilder(1).resource("a", 0, 1).resource("b", 8, 0).player("u", 1, ["b"], ["a"]).build()
    return game, State.from_indices(game, [0])


@pytest.mark.parametrize("x,m", [(F(8), 3), (F(9), 4), (F(1), 0), (F(1, 2), 0), (F(1025, 1024), 1), (F(2**40), 40)])
def test_ceil_log2(x, m):
    assert ceil_log2(x) == m


def test_param_examples():
    game, state = _ladder_game()
    params = derive_params(game, state, F(1, 10))
    assert (params.c_min, params.c_max, params.m) == (1, 8, 3)
    assert params.q == F(11, 10)
    assert params.p == 1 / (1 / theta(1, F(11, 10)) - F(1, 5))
    assert abs(float(params.p) - 9.0294) < 1e-3
    assert abs(float(theta(1, F(11, 10))) - 3.2180) < 1e-4
    assert params.g >= 2
    assert list(params.b) == sorted(params.b, reverse=True)
    assert params.b[-1] <= params.c_min
    assert abs(float(params.rho_bound) - 13.544) < 1e-3


def test_gamma_range():
    game, state = _ladder_game()
    with pytest.raises(GammaRangeError):
        derive_params(game, state, F(1, 5))
    with pytest.raises(GammaRangeError):
        derive_params(game, state, F(1, 5), force=True)
    with pytest.raises(GammaRangeError):
        derive_params(game, state, F(0))
    with pytest.raises(ValueError):
        gamma_max(1, Mode.WEIGHTED)
    assert gamma_max(2, Mode.PSI) == F(1, 3888)
    assert gamma_max(2, Mode.WEIGHTED) == 1 / (4 * 2 * theta(2, F(8)))


def test_force_outside_range_marks_params():
    game = GameBuilder(2).resource("a", 0, 1, 1).resource("b", 1, 0, 1).player("u", 1, ["a"], ["b"]).build()
    state = State.from_indices(game, [0])
    params = derive_params(game, state, F(1, 1000), force=True)
    assert params.forced and not params.in_range


def test_single_player_moves_at_most_once():
    game, state = _ladder_game()
    params = derive_params(game, state, F(1, 10))
    final, movelog = solve(game, state, params)
    assert len(movelog.records) == 1
    assert game.strategy_key(final[0]) == ("a",)
    assert audit_log(game, movelog, params).passed


def test_crossing_two_player_linear_game():
    game = (GameBuilder(1).resource("x", 0, 1).resource("y", 0, 1).resource("z", 0, 1)
            .player("u", 1, ["x", "y"], ["z"]).player("v", 1, ["y", "z"], ["x"]).build())
    state = State.from_indices(game, [0, 0])
    gamma = F(1, 10)
    params = derive_params(game, state, gamma)
    final, movelog = solve(game, state, params)
    rho = verify_approx_equilibrium(game, final).rho_achieved
    assert rho <= (3 + SQRT5_UPPER) / 2 + 110 * gamma
    assert audit_log(game, movelog, params).passed


def test_select_mover_prefers_highest_cost():
    game = (GameBuilder(1).resource("a", 0, 5).resource("b", 0, 3).resource("c", 0, F(1, 10))
            .player("u", 1, ["b"], ["c"]).player("v", 1, ["a"], ["c"]).build())
    state = State.from_indices(game, [0, 0])
    ctx = PhaseContext(0, F(1), F(11, 10))
    assert select_mover(game, state, ctx) == 1
    assert select_mover(game, state, dataclasses.replace(ctx, policy="minid")) == 0
    assert select_mover(game, state, PhaseContext(0, F(100), F(11, 10))) is None


def test_runs_are_deterministic():
    game, state = _ladder_game()
    params = derive_params(game, state, F(1, 10))
    assert solve(game, state, params)[1].records == solve(game, state, params)[1].records


def test_move_cap_raises():
    game, state = _ladder_game()
    params = dataclasses.replace(derive_params(game, state, F(1, 10)), move_cap=0)
    with pytest.raises(MoveCapExceeded):
        solve(game, state, params)


def test_corrupted_log_is_flagged():
    game = (GameBuilder(1).resource("a", 0, 1).resource("b", 0, 1)
            .player("u", 1, ["a"], ["b"]).player("v", 2, ["a"], ["b"]).player("w", 3, ["a"], ["b"]).build())
    state = State.from_indices(game, [0, 0, 0])
    params = derive_params(game, state, F(1, 10))
    _, movelog = solve(game, state, params)
    assert movelog.records
    rec = movelog.records[0]
    movelog.records[0] = dataclasses.replace(rec, potential_after=rec.potential_before + 1)
    report = audit_log(game, movelog, params)
    assert not report.passed
    assert any("potential" in f for f in report.failures)


@settings(max_examples=40, deadline=None)
@given(small_games(max_n=4, max_degree=1))
def test_linear_runs_audit_and_land_in_oracle_set(gs):
    game, state = gs
    params = derive_params(game, state, F(1, 10))
    final, movelog = solve(game, state, params)
    report = audit_log(game, movelog, params)
    assert report.passed, report.failures
    assert phase_last_move_bound(game, movelog) == []
    assert final in exact_equilibria(game, Mode.PSI, params.rho_bound)
    assert verify_approx_equilibrium(game, final, Mode.WEIGHTED).rho_achieved <= params.rho_bound_weighted


@settings(max_examples=20, deadline=None)
@given(small_games(max_n=3, max_degree=1))
def test_minid_policy_also_audits(gs):
    game, state = gs
    params = derive_params(game, state, F(1, 10), policy="minid")
    final, movelog = solve(game, state, params)
    assert audit_log(game, movelog, params).passed
    assert verify_approx_equilibrium(game, final).rho_achieved <= params.rho_bound
