"""Phased best-response search for approximate equilibria.

One engine runs both variants. In ``psi`` mode every decision uses the
Psi-game cost; in ``weighted`` mode decisions use the weighted-game cost with
inflated move thresholds, so each move still lowers the Psi-game potential.

Phase 0 lets every player whose cost is at least ``b_1`` make ``q``-moves.
Phase ``i`` (1..m-1) lets not-yet-finalized players make ``p``-moves if their
cost is at least ``b_i`` and ``q``-moves if it lies in ``[b_{i+1}, b_i)``; at
the end of the phase every player with cost at least ``b_i`` is finalized.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from .dynamics import LoadTracker, best_response, strategy_cost, verify_approx_equilibrium
from .game import Game, State
from .potential import THETA1_MAX_RHO, Mode, aggregates, cost_psi, partial_potential_full, potential, theta

log = logging.getLogger(__name__)

DEFAULT_MOVE_CAP = 10**7
POLICIES = ("maxcost", "minid")


class GammaRangeError(ValueError):
    pass


class MoveCapExceeded(RuntimeError):
    pass


def gamma_max(degree: int, mode: Mode | str) -> Fraction:
    """Largest admissible gamma for the given degree and mode."""
    if Mode(mode) == Mode.PSI:
        if degree == 1:
            return Fraction(1, 10)
        return 1 / (8 * theta(degree, Fraction(2)))
    if degree < 2:
        raise ValueError("weighted mode needs degree >= 2 (for degree 1 the two games coincide; use psi)")
    df = factorial(degree)
    return 1 / (4 * df * theta(degree, Fraction(2 * df * df)))


def ceil_log2(x: Fraction) -> int:
    """Smallest integer m with ``2**m >= x``."""
    if x <= 0:
        raise ValueError("log of a non-positive number")
    m = max(0, (x.numerator // x.denominator).bit_length() - 1)
    while Fraction(2) ** m < x:
        m += 1
    while m > 0 and Fraction(2) ** (m - 1) >= x:
        m -= 1
    return m


@dataclass(frozen=True)
class SolverParams:
    mode: Mode
    gamma: Fraction
    degree: int
    n: int
    c_min: Fraction
    c_max: Fraction
    m: int
    g: Fraction
    q: Fraction
    p: Fraction
    b: tuple[Fraction, ...]
    move_cap: int = DEFAULT_MOVE_CAP
    policy: str = "maxcost"
    forced: bool = False

    @property
    def move_bound(self) -> Fraction:
        """Worst-case number of moves, ``m n g / gamma^2``."""
        return self.m * self.n * self.g / self.gamma**2

    @property
    def in_range(self) -> bool:
        return 0 < self.gamma <= gamma_max(self.degree, self.mode)

    @property
    def rho_bound(self) -> Fraction:
        """Certified approximation factor of the output, in the run's own cost."""
        if self.mode == Mode.PSI:
            return (1 + 2 * self.gamma) / (1 - 2 * self.gamma) * self.p
        df = factorial(self.degree)
        return 6 * df * df * theta(self.degree, Fraction(2 * df * df))

    @property
    def rho_bound_weighted(self) -> Fraction:
        """Certified factor for the weighted game (psi runs lose at most d!)."""
        if self.mode == Mode.PSI:
            return factorial(self.degree) * self.rho_bound
        return self.rho_bound


def derive_params(game: Game, initial_state: State, gamma: Fraction, mode: Mode | str = Mode.PSI, *,
                  force: bool = False, move_cap: int = DEFAULT_MOVE_CAP, policy: str = "maxcost") -> SolverParams:
    mode = Mode(mode)
    gamma = Fraction(gamma)
    d, n = game.degree, game.n
    if policy not in POLICIES:
        raise ValueError(f"unknown mover policy {policy!r}")
    if gamma <= 0:
        raise GammaRangeError("gamma must be positive")
    gmax = gamma_max(d, mode)
    if gamma > gmax and not force:
        raise GammaRangeError(f"gamma={gamma} outside (0, {gmax}] for degree {d} in {mode.value} mode")
    df = factorial(d)
    if mode == Mode.PSI:
        q = 1 + gamma
        if d == 1 and q > THETA1_MAX_RHO:
            # the linear stretch bound is only known up to 11/10, even when forced
            raise GammaRangeError(f"gamma={gamma} gives q={q} > 11/10, outside the linear stretch bound")
        inv = 1 / theta(d, q) - 2 * gamma
    else:
        q = df * (1 + gamma)
        th = theta(d, df * q)
        inv = 1 / (df * th) - 2 * gamma
    if inv <= 0:
        raise GammaRangeError(f"gamma={gamma} too large: p would not be positive")
    p = 1 / inv

    zero = State.zero(game)
    zero_aggs = aggregates(game, zero)
    solo = [best_response(game, zero, u, mode, zero_aggs)[1] for u in range(n)]
    c_min = min(solo)
    if c_min <= 0:
        raise ValueError("some player has zero cost playing alone; costs must be positive")
    aggs = aggregates(game, initial_state)
    c_max = max(strategy_cost(game, aggs, initial_state, u, initial_state[u], mode) for u in range(n))
    m = max(1, ceil_log2(c_max / c_min))
    g = 2 * (1 + m * (1 + 1 / gamma)) ** d * d**d * n / gamma**3
    b = tuple(c_max / g**i for i in range(m + 1))
    return SolverParams(mode, gamma, d, n, c_min, c_max, m, g, q, p, b, move_cap, policy, force)


def cost_in(game: Game, state: State, u: int, mode: Mode | str) -> Fraction:
    return strategy_cost(game, aggregates(game, state), state, u, state[u], mode)


@dataclass(frozen=True)
class PhaseContext:
    """Admission rule of one phase.

    A player outside ``finalized`` is eligible if its cost is ``>= upper`` and
    it has a ``high_factor``-move, or its cost lies in ``[lower, upper)`` and it
    has a ``low_factor``-move.
    """

    phase: int
    upper: Fraction
    high_factor: Fraction
    lower: Fraction | None = None
    low_factor: Fraction | None = None
    finalized: frozenset[int] = frozenset()
    mode: Mode = Mode.PSI
    policy: str = "maxcost"

    def admits(self, cost: Fraction, br_cost: Fraction) -> str | None:
        """Move kind if a move from ``cost`` to ``br_cost`` is admitted, else None."""
        if cost >= self.upper:
            if br_cost * self.high_factor < cost:
                return "phase0" if self.phase == 0 else "p-move"
        elif self.lower is not None and cost >= self.lower:
            if br_cost * self.low_factor < cost:
                return "q-move"
        return None


def phase_context(params: SolverParams, i: int, finalized: frozenset[int] = frozenset()) -> PhaseContext:
    if i == 0:
        return PhaseContext(0, params.b[1], params.q, mode=params.mode, policy=params.policy)
    return PhaseContext(i, params.b[i], params.p, params.b[i + 1], params.q, frozenset(finalized),
                        params.mode, params.policy)


def _candidates(tracker: LoadTracker, ctx: PhaseContext) -> Iterator[tuple[int, Fraction, frozenset[int], Fraction, str]]:
    for u in range(tracker.game.n):
        if u in ctx.finalized:
            continue
        c = tracker.cost(u, ctx.mode)
        # cheap pre-filter: nothing can be admitted below the lower band
        if c < ctx.upper and (ctx.lower is None or c < ctx.lower):
            continue
        s, bc = tracker.best_response(u, ctx.mode)
        kind = ctx.admits(c, bc)
        if kind is not None:
            yield u, c, s, bc, kind


def _pick(tracker: LoadTracker, ctx: PhaseContext):
    ids = [p.id for p in tracker.game.players]
    if ctx.policy == "minid":
        key = lambda cand: (ids[cand[0]],)
    else:
        key = lambda cand: (-cand[1], ids[cand[0]])
    return min(_candidates(tracker, ctx), key=key, default=None)


def select_mover(game: Game, state: State, ctx: PhaseContext) -> int | None:
    """Deterministic choice among eligible players, or None when the phase is over.

    ``maxcost`` picks the highest current cost (ties by player id); ``minid``
    picks the smallest player id.
    """
    cand = _pick(LoadTracker(game, state), ctx)
    return None if cand is None else cand[0]


@dataclass(frozen=True)
class MoveRecord:
    phase: int
    player: int
    from_strategy: frozenset[int]
    to_strategy: frozenset[int]
    cost_before: Fraction
    cost_after: Fraction
    potential_before: Fraction
    potential_after: Fraction
    move_kind: str
    psi_cost_after: Fraction


@dataclass
class PhaseSummary:
    index: int
    start_state: State
    end_state: State | None = None
    movers: list[int] = field(default_factory=list)
    finalized: list[int] = field(default_factory=list)
    last_move_cost: dict[int, Fraction] = field(default_factory=dict)
    moves: int = 0


@dataclass
class MoveLog:
    initial_state: State
    records: list[MoveRecord] = field(default_factory=list)
    phases: list[PhaseSummary] = field(default_factory=list)
    final_state: State | None = None

    def finalized_at(self) -> dict[int, int]:
        """Player -> phase at whose end it was finalized."""
        return {u: ph.index for ph in self.phases for u in ph.finalized}

    def snapshot(self, i: int) -> State:
        """State at the end of phase i (``S^i``)."""
        return self.phases[i].end_state


def solve(game: Game, initial_state: State, params: SolverParams,
          on_move=None) -> tuple[State, MoveLog]:
    """Run the phased search from ``initial_state``; ``on_move`` sees each record as it is made."""
    tracker = LoadTracker(game, initial_state)
    movelog = MoveLog(initial_state)
    finalized: set[int] = set()

    def run_phase(i: int) -> None:
        ctx = phase_context(params, i, frozenset(finalized))
        summary = PhaseSummary(i, tracker.state)
        movelog.phases.append(summary)
        while True:
            cand = _pick(tracker, ctx)
            if cand is None:
                break
            if len(movelog.records) >= params.move_cap:
                raise MoveCapExceeded(f"move cap {params.move_cap} reached in phase {i}")
            u, c, s, bc, kind = cand
            old, phi_before = tracker.state[u], tracker.potential
            tracker.move(u, s)
            rec = MoveRecord(i, u, old, s, c, bc, phi_before, tracker.potential, kind,
                             tracker.cost(u, Mode.PSI))
            movelog.records.append(rec)
            if on_move is not None:
                on_move(rec)
            if u not in summary.movers:
                summary.movers.append(u)
            summary.last_move_cost[u] = rec.psi_cost_after
            summary.moves += 1
        summary.end_state = tracker.state
        if i >= 1:
            newly = [u for u in range(game.n) if u not in finalized and tracker.cost(u, params.mode) >= params.b[i]]
            finalized.update(newly)
            summary.finalized = newly
        log.debug("phase %d: %d moves, %d finalized", i, summary.moves, len(summary.finalized))

    run_phase(0)
    for i in range(1, params.m):
        run_phase(i)
    movelog.final_state = tracker.state
    return tracker.state, movelog


# ---------------------------------------------------------------------------
# audit


@dataclass
class AuditReport:
    passed: bool
    failures: list[str]
    checks: dict[str, int]


def audit_log(game: Game, movelog: MoveLog, params: SolverParams, *, deviation_check: bool = True) -> AuditReport:
    """Recompute every logged quantity from scratch and test the run-time guarantees.

    Checks: record consistency and strict cost/potential decrease per move,
    admission rules, finalized sets, the per-phase partial-potential bound,
    the last-move bound, the phase-0 exit condition, termination, the
    move-count bound, and for finalized players the cost-increase and
    (explicit players only) deviation-decrease bounds.
    """
    failures: list[str] = []
    checks: dict[str, int] = {}
    mode, gamma, n = params.mode, params.gamma, game.n

    def tick(name: str) -> None:
        checks[name] = checks.get(name, 0) + 1

    # finalized sets, rebuilt from the phase snapshots
    finalized_after: dict[int, frozenset[int]] = {0: frozenset()}
    done: set[int] = set()
    for ph in movelog.phases:
        if ph.index >= 1 and ph.end_state is not None:
            aggs = aggregates(game, ph.end_state)
            newly = {u for u in range(n) if u not in done
                     and strategy_cost(game, aggs, ph.end_state, u, ph.end_state[u], mode) >= params.b[ph.index]}
            if newly != set(ph.finalized):
                failures.append(f"phase {ph.index}: logged finalized set differs from recomputation")
            done |= newly
        finalized_after[ph.index] = frozenset(done)

    def finalized_before(i: int) -> frozenset[int]:
        return finalized_after.get(i - 1, frozenset()) if i >= 1 else frozenset()

    state = movelog.initial_state
    for k, rec in enumerate(movelog.records):
        where = f"move {k} (phase {rec.phase}, player {game.players[rec.player].id})"
        tick("moves")
        if state[rec.player] != rec.from_strategy:
            failures.append(f"{where}: from-strategy does not match the replayed state")
        aggs = aggregates(game, state)
        c_now = strategy_cost(game, aggs, state, rec.player, state[rec.player], mode)
        after = state.replace(rec.player, rec.to_strategy)
        c_next = cost_in(game, after, rec.player, mode)
        phi_now, phi_next = potential(game, state), potential(game, after)
        if (c_now, c_next, phi_now, phi_next) != (rec.cost_before, rec.cost_after,
                                                   rec.potential_before, rec.potential_after):
            failures.append(f"{where}: logged costs/potentials differ from recomputation")
        if not rec.cost_after < rec.cost_before:
            failures.append(f"{where}: cost did not strictly decrease")
        if not rec.potential_after < rec.potential_before:
            failures.append(f"{where}: potential did not strictly decrease")
        if best_response(game, state, rec.player, mode, aggs)[1] != c_next:
            failures.append(f"{where}: move is not a best response")
        ctx = phase_context(params, rec.phase, finalized_before(rec.phase))
        if rec.player in ctx.finalized:
            failures.append(f"{where}: finalized player moved")
        if ctx.admits(rec.cost_before, rec.cost_after) != rec.move_kind:
            failures.append(f"{where}: move kind {rec.move_kind!r} violates the phase admission rule")
        state = after

    if movelog.final_state is not None and state != movelog.final_state:
        failures.append("replayed final state differs from logged final state")
    final = movelog.final_state if movelog.final_state is not None else state

    tick("move_bound")
    if len(movelog.records) > params.move_bound:
        failures.append(f"{len(movelog.records)} moves exceed the bound m n g / gamma^2")

    # phase 0 exit: players at or above b_1 hold a q-approximate equilibrium
    if movelog.phases:
        s0 = movelog.phases[0].end_state
        aggs0 = aggregates(game, s0)
        for u in range(n):
            c = strategy_cost(game, aggs0, s0, u, s0[u], mode)
            if c >= params.b[1]:
                tick("phase0_exit")
                if best_response(game, s0, u, mode, aggs0)[1] * params.q < c:
                    failures.append(f"phase 0 exit: player {game.players[u].id} still has a q-move")

    for ph in movelog.phases:
        if ph.index == 0:
            continue
        movers = set(ph.movers)
        tick("phase_potential")
        phi_start = partial_potential_full(game, ph.start_state, movers)
        if phi_start > n * params.b[ph.index] / gamma:
            failures.append(f"phase {ph.index}: Phi_R(S^(i-1)) = {float(phi_start):.6g} exceeds n b_i / gamma")
        if movers:
            tick("last_move")
            phi_end = partial_potential_full(game, ph.end_state, movers)
            if phi_end > sum(ph.last_move_cost.values(), Fraction(0)):
                failures.append(f"phase {ph.index}: Phi_R(S^i) exceeds the sum of last-move costs")

    # termination: nobody eligible in the last phase at the final state
    tick("termination")
    last = params.m - 1
    if _pick(LoadTracker(game, final), phase_context(params, last, finalized_before(last))) is not None:
        failures.append("final state still has an eligible mover")

    final_aggs = aggregates(game, final)
    for u, j in movelog.finalized_at().items():
        sj = movelog.snapshot(j)
        who = f"player {game.players[u].id} (finalized in phase {j})"
        tick("cost_increase")
        if cost_psi(game, final, u) > (1 + 2 * gamma) * cost_psi(game, sj, u):
            failures.append(f"{who}: Psi-cost grew by more than 1+2gamma")
        if deviation_check and not game.players[u].is_network:
            sj_aggs = aggregates(game, sj)
            for s in game.explicit_strategies(u):
                tick("deviation_decrease")
                now = strategy_cost(game, final_aggs, final, u, s, Mode.PSI)
                then = strategy_cost(game, sj_aggs, sj, u, s, Mode.PSI)
                if now < (1 - 2 * gamma) * then:
                    failures.append(f"{who}: deviation cost fell by more than 1-2gamma")
    return AuditReport(not failures, failures, checks)


def run_quality(game: Game, state: State, params: SolverParams) -> dict[str, Fraction | float]:
    """Achieved approximation in both games for a final state."""
    own = verify_approx_equilibrium(game, state, params.mode).rho_achieved
    weighted = own if params.mode == Mode.WEIGHTED else verify_approx_equilibrium(game, state, Mode.WEIGHTED).rho_achieved
    return {"rho_achieved": own, "rho_achieved_weighted": weighted}
