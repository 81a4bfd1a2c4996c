"""Player costs, the Psi-game potential and its partial versions, and the stretch constants."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from enum import Enum
from fractions import Fraction
from math import factorial, isqrt

from .game import Game, State, load_multisets
from .psi import PsiAggregate, psi_aggregate


class Mode(str, Enum):
    """Which cost drives decisions: the Psi-game cost or the weighted-game cost."""

    PSI = "psi"
    WEIGHTED = "weighted"


# ceil(sqrt(5) * 10**40) / 10**40, an upper bracket within 1e-40 of sqrt(5)
_SQRT5_DIGITS = 40
SQRT5_UPPER = Fraction(isqrt(5 * 10 ** (2 * _SQRT5_DIGITS)) + 1, 10**_SQRT5_DIGITS)

THETA1_MAX_RHO = Fraction(11, 10)


def aggregates(game: Game, state: State, players: Iterable[int] | None = None) -> list[PsiAggregate]:
    kmax = game.degree + 1
    return [psi_aggregate(ws, kmax) for ws in load_multisets(game, state, players)]


def resource_price(coeffs: Sequence[Fraction], agg: PsiAggregate, mode: Mode | str) -> Fraction:
    """Per-unit-weight latency of a resource given the aggregate of its users."""
    total = Fraction(0)
    if mode == Mode.PSI:
        for k, a in enumerate(coeffs):
            if a:
                total += a * agg.values[k]
    else:
        load = agg.load
        power = Fraction(1)
        for a in coeffs:
            if a:
                total += a * power
            power *= load
    return total


def _cost(game: Game, state: State, u: int, mode: Mode | str) -> Fraction:
    if not 0 <= u < game.n:
        raise KeyError(f"unknown player {u!r}")
    aggs = aggregates(game, state)
    w = game.players[u].weight
    return w * sum((resource_price(game.resources[e].coeffs, aggs[e], mode) for e in state[u]), Fraction(0))


def cost_weighted(game: Game, state: State, u: int) -> Fraction:
    """``c_u(S) = w_u * sum_e f_e(L(N_e(S)))`` over u's resources."""
    return _cost(game, state, u, Mode.WEIGHTED)


def cost_psi(game: Game, state: State, u: int) -> Fraction:
    """``w_u * sum_e sum_k a_{e,k} Psi_k(N_e(S))`` over u's resources."""
    return _cost(game, state, u, Mode.PSI)


def cost(game: Game, state: State, u: int, mode: Mode | str) -> Fraction:
    return _cost(game, state, u, Mode(mode))


def potential_from_aggregates(game: Game, aggs: Sequence[PsiAggregate]) -> Fraction:
    total = Fraction(0)
    for res, agg in zip(game.resources, aggs):
        if agg.count:
            total += resource_potential(res.coeffs, agg)
    return total


def resource_potential(coeffs: Sequence[Fraction], agg: PsiAggregate) -> Fraction:
    return sum((a / (k + 1) * agg.values[k + 1] for k, a in enumerate(coeffs) if a), Fraction(0))


def potential(game: Game, state: State, players: Iterable[int] | None = None) -> Fraction:
    """Psi-game potential; with ``players`` given, the potential of that subgame."""
    return potential_from_aggregates(game, aggregates(game, state, players))


def partial_potential(game: Game, state: State, within: Iterable[int], part: Iterable[int]) -> Fraction:
    """``Phi^A(S) - Phi^{A minus B}(S)`` for ``B = part`` inside ``A = within``."""
    a, b = frozenset(within), frozenset(part)
    if not b <= a:
        raise ValueError("part must be a subset of within")
    if not b:
        return Fraction(0)
    return potential(game, state, sorted(a)) - potential(game, state, sorted(a - b))


def partial_potential_full(game: Game, state: State, part: Iterable[int]) -> Fraction:
    """``Phi_B(S)``: the B-partial potential of the whole game."""
    return partial_potential(game, state, range(game.n), part)


def theta(d: int, rho: Fraction) -> Fraction:
    """Rational upper bound on the rho-stretch of the Psi-game potential.

    For ``d == 1`` this is ``(3 + sqrt5)/2 + 6(rho - 1)`` with sqrt5 rounded up
    (error below 1e-40), valid for ``rho`` in ``[1, 11/10]`` only. For
    ``d >= 2`` it is ``rho (rho+1)^d (d+1)^(d+1)``, exact.
    """
    rho = Fraction(rho)
    if d < 1:
        raise ValueError("degree must be >= 1")
    if rho < 1:
        raise ValueError(f"rho must be >= 1, got {rho}")
    if d == 1:
        if rho > THETA1_MAX_RHO:
            raise ValueError(f"linear stretch bound only holds for rho in [1, 11/10], got {rho}")
        return (3 + SQRT5_UPPER) / 2 + 6 * (rho - 1)
    return rho * (rho + 1) ** d * (d + 1) ** (d + 1)


def xi(eps: Fraction, d: int) -> Fraction:
    """``(1 + 1/eps)^d d^d - 1``."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if d < 1:
        raise ValueError("degree must be >= 1")
    return (1 + 1 / eps) ** d * d**d - 1


def d_factorial(game_or_degree: Game | int) -> int:
    d = game_or_degree if isinstance(game_or_degree, int) else game_or_degree.degree
    return factorial(d)
