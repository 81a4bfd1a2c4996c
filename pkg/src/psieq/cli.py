"""Command-line entry point: ``psieq {gen,solve,verify,oracle,dynamics}``.

Exit codes: 0 success, 1 verification or audit failure, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections.abc import Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import __version__
from .dynamics import NoStrategyError, verify_approx_equilibrium
from .game import Game, State, parse_scalar
from .generate import GenSpec, InfeasibleSpecError, grid_network, parallel_links, random_game, series_parallel
from .io import InstanceError, parse_instance_with_state, rational, read_rational, serialize_instance, state_from_mapping, strategy_ids
from .oracle import (
    DegenerateGameError,
    EnumerationError,
    DEFAULT_CAP,
    check_partial_stretch,
    dynamics_graph,
    exact_equilibria,
    local_potential_minima,
    measure_stretch,
    min_potential_state,
)
from .potential import Mode, potential, theta
from .solver import (
    DEFAULT_MOVE_CAP,
    POLICIES,
    GammaRangeError,
    MoveCapExceeded,
    MoveRecord,
    audit_log,
    derive_params,
    gamma_max,
    run_quality,
    solve,
)

log = logging.getLogger("psieq")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class UsageError(Exception):
    """Bad flags or unreadable input; maps to exit code 2."""


def _fraction_arg(text: str) -> Fraction:
    try:
        return parse_scalar(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _dump(data: Any) -> str:
    return json.dumps(data, indent=2) + "\n"


def _load_game(args) -> tuple[Game, State | None]:
    if args.input is None:
        raise UsageError("--input is required")
    return parse_instance_with_state(_read_text(args.input))


def _envelope(command: str, mode: Mode, **rest) -> dict[str, Any]:
    return {"command": command, "version": __version__, "mode": mode.value, **rest}


# --- gen -------------------------------------------------------------------


def cmd_gen(args) -> int:
    spec = GenSpec(n=args.players, degree=args.degree, resources=args.resources, strategies=args.strategies,
                   weight_range=(args.wmin, args.wmax), coeff_range=(args.cmin, args.cmax),
                   density=args.density, rational_weights=args.rational_weights)
    if args.family == "random":
        game, state = random_game(spec, args.seed)
    elif args.family == "links":
        game, state = parallel_links(spec, args.links, args.seed)
    elif args.family == "grid":
        game, state = grid_network(spec, args.rows, args.cols, args.seed)
    else:
        game, state = series_parallel(spec, args.operations, args.seed)
    _write_text(args.output, serialize_instance(game, state))
    return EXIT_OK


# --- solve -----------------------------------------------------------------


def _record_json(game: Game, k: int, rec: MoveRecord) -> dict[str, Any]:
    return {
        "move": k,
        "phase": rec.phase,
        "player": game.players[rec.player].id,
        "kind": rec.move_kind,
        "from": strategy_ids(game, rec.from_strategy),
        "to": strategy_ids(game, rec.to_strategy),
        "cost_before": rational(rec.cost_before),
        "cost_after": rational(rec.cost_after),
        "potential_before": rational(rec.potential_before),
        "potential_after": rational(rec.potential_after),
    }


TRAJECTORY_COLUMNS = ("move", "phase", "player", "kind", "cost_before", "cost_after", "potential")


def _write_trajectory(path: str, game: Game, records: Sequence[MoveRecord], phi0: Fraction) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, delimiter="\t", lineterminator="\n")
        out.writerow(TRAJECTORY_COLUMNS)
        out.writerow([0, "", "", "start", "", "", float(phi0)])
        for k, rec in enumerate(records, 1):
            out.writerow([k, rec.phase, game.players[rec.player].id, rec.move_kind,
                          float(rec.cost_before), float(rec.cost_after), float(rec.potential_after)])


def cmd_solve(args) -> int:
    game, state = _load_game(args)
    mode = Mode(args.mode)
    if args.state is not None:
        state = _load_state(game, args.state)
    if state is None:
        raise UsageError("no initial state: add 'initial_state' to the instance or pass --state")
    gamma = args.gamma if args.gamma is not None else gamma_max(game.degree, mode)
    params = derive_params(game, state, gamma, mode, force=args.force, move_cap=args.move_cap, policy=args.policy)

    log_fh = open(args.log, "w", encoding="utf-8") if args.log else None
    counter = 0

    def stream(rec: MoveRecord) -> None:
        nonlocal counter
        counter += 1
        if log_fh is not None:
            log_fh.write(json.dumps(_record_json(game, counter, rec)) + "\n")

    try:
        final, movelog = solve(game, state, params, on_move=stream)
    finally:
        if log_fh is not None:
            log_fh.close()

    audit = audit_log(game, movelog, params, deviation_check=game.is_explicit)
    quality = run_quality(game, final, params)
    if args.trajectory:
        _write_trajectory(args.trajectory, game, movelog.records, potential(game, state))

    report = _envelope(
        "solve", mode,
        gamma=rational(params.gamma),
        guarantees="void" if params.forced and not params.in_range else "certified",
        policy=params.policy,
        params={
            "n": params.n, "degree": params.degree,
            "c_min": rational(params.c_min), "c_max": rational(params.c_max),
            "m": params.m, "g": rational(params.g), "q": rational(params.q), "p": rational(params.p),
            "b": [rational(b) for b in params.b],
            "move_cap": params.move_cap,
            "move_bound": rational(params.move_bound),
        },
        moves=len(movelog.records),
        phases=[{"index": ph.index, "moves": ph.moves,
                 "movers": [game.players[u].id for u in ph.movers],
                 "finalized": [game.players[u].id for u in ph.finalized]} for ph in movelog.phases],
        rho_achieved=rational(quality["rho_achieved"]),
        rho_bound=rational(params.rho_bound),
        rho_achieved_weighted=rational(quality["rho_achieved_weighted"]),
        rho_bound_weighted=rational(params.rho_bound_weighted),
        audit={"passed": audit.passed, "failures": audit.failures, "checks": audit.checks},
        final_state=final.to_mapping(game),
    )
    _write_text(args.output, _dump(report))
    ok = audit.passed and quality["rho_achieved"] <= params.rho_bound
    return EXIT_OK if ok or params.forced else EXIT_FAIL


# --- verify ----------------------------------------------------------------


def _load_state(game: Game, path: str) -> State:
    try:
        data = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InstanceError([f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    if isinstance(data, dict):
        for key in ("final_state", "state", "initial_state"):
            if key in data:
                return state_from_mapping(game, data[key])
    return state_from_mapping(game, data)


def cmd_verify(args) -> int:
    game, state = _load_game(args)
    mode = Mode(args.mode)
    rho = args.rho
    if args.state is not None:
        state = _load_state(game, args.state)
        if rho is None:
            data = json.loads(_read_text(args.state))
            if isinstance(data, dict) and "rho_bound" in data and data.get("mode") == mode.value:
                rho = read_rational(data["rho_bound"])
    if state is None:
        raise UsageError("no state to verify: pass --state or add 'initial_state' to the instance")
    report = verify_approx_equilibrium(game, state, mode)
    out = _envelope(
        "verify", mode,
        rho_achieved=rational(report.rho_achieved),
        rho_bound=None if rho is None else rational(rho),
        ratios={game.players[u].id: rational(r) for u, r in report.ratios.items()},
    )
    ok = rho is None or report.rho_achieved <= rho
    out["passed"] = ok
    _write_text(args.output, _dump(out))
    shown = rational(report.rho_achieved)
    if isinstance(shown, dict):
        shown = f"{shown['exact']} (~{shown['decimal']})"
    print(f"rho_achieved {shown}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


# --- oracle / dynamics -----------------------------------------------------


def cmd_oracle(args) -> int:
    game, _ = _load_game(args)
    mode = Mode(args.mode)
    rho = args.rho if args.rho is not None else Fraction(1)
    results: dict[str, Any] = {}
    ok = True
    sweeps = set(args.sweep)
    if "equilibria" in sweeps:
        eqs = exact_equilibria(game, mode, rho, args.cap)
        results["equilibria"] = {"count": len(eqs), "states": [s.to_mapping(game) for s in eqs]}
        star, phi = min_potential_state(game, args.cap)
        results["min_potential"] = {"state": star.to_mapping(game), "potential": rational(phi)}
    if "stretch" in sweeps:
        stretch = measure_stretch(game, rho, args.cap)
        bound = theta(game.degree, rho)
        results["stretch"] = {"measured": rational(stretch), "theta": rational(bound)}
        ok &= stretch <= bound
    if "partial" in sweeps:
        rep = check_partial_stretch(game, rho, args.samples, args.seed, args.cap)
        results["partial_stretch"] = {"samples": rep.samples, "comparisons": rep.comparisons,
                                      "violations": rep.violations}
        ok &= rep.passed
    out = _envelope("oracle", mode, rho=rational(rho), results=results, passed=ok)
    _write_text(args.output, _dump(out))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_dynamics(args) -> int:
    game, _ = _load_game(args)
    mode = Mode(args.mode)
    dg = dynamics_graph(game, mode, args.cap)
    out = _envelope(
        "dynamics", mode,
        states=len(dg.states),
        edges=dg.edge_count,
        sinks=len(dg.sinks),
        acyclic=dg.acyclic,
        cycle_witness=None if dg.cycle_witness is None else [
            {"state": dg.states[i].to_mapping(game), "player": game.players[u].id, "to": strategy_ids(game, s)}
            for i, u, s in dg.cycle_witness],
    )
    ok = True
    if mode == Mode.PSI:
        minima = local_potential_minima(game, args.cap)
        out["sinks_are_local_minima"] = sorted(dg.sinks) == minima
        ok = dg.acyclic and out["sinks_are_local_minima"]
    _write_text(args.output, _dump(out))
    return EXIT_OK if ok else EXIT_FAIL


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psieq", description="Approximate pure equilibria in weighted congestion games.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, output=True):
        p.add_argument("--input", "-i", help="instance JSON ('-' for stdin)")
        if output:
            p.add_argument("--output", "-o", help="where to write the JSON result (default stdout)")
        p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.PSI.value)

    g = sub.add_parser("gen", help="generate a random instance with an initial state")
    g.add_argument("--family", choices=["random", "links", "grid", "sp"], default="random")
    g.add_argument("--output", "-o")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--players", "-n", type=int, default=3)
    g.add_argument("--degree", "-d", type=int, default=1)
    g.add_argument("--resources", type=int, default=3)
    g.add_argument("--strategies", type=int, default=2)
    g.add_argument("--wmin", type=int, default=1)
    g.add_argument("--wmax", type=int, default=3)
    g.add_argument("--cmin", type=int, default=1)
    g.add_argument("--cmax", type=int, default=3)
    g.add_argument("--density", type=float, default=0.6)
    g.add_argument("--rational-weights", action="store_true")
    g.add_argument("--links", type=int, default=2)
    g.add_argument("--rows", type=int, default=3)
    g.add_argument("--cols", type=int, default=3)
    g.add_argument("--operations", type=int, default=6)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="run the phased search and audit the result")
    common(s)
    s.add_argument("--gamma", type=_fraction_arg, help="defaults to the largest admissible value")
    s.add_argument("--state", help="initial state JSON (overrides the instance's initial_state)")
    s.add_argument("--move-cap", type=int, default=DEFAULT_MOVE_CAP)
    s.add_argument("--force", action="store_true", help="allow gamma outside the admissible range")
    s.add_argument("--log", help="stream the move log here as JSON lines")
    s.add_argument("--policy", choices=POLICIES, default="maxcost")
    s.add_argument("--trajectory", help="write per-move cost/potential columns as TSV")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="measure how far a state is from equilibrium")
    common(v)
    v.add_argument("--state", help="state JSON, or a solve report (its final_state is used)")
    v.add_argument("--rho", type=_fraction_arg, help="fail if rho_achieved exceeds this")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", help="brute-force sweeps on an enumerable game")
    common(o)
    o.add_argument("--rho", type=_fraction_arg)
    o.add_argument("--cap", type=int, default=DEFAULT_CAP)
    o.add_argument("--sweep", nargs="+", choices=["equilibria", "stretch", "partial"], default=["equilibria"])
    o.add_argument("--samples", type=int, default=200)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=cmd_oracle)

    dy = sub.add_parser("dynamics", help="build the improvement-move graph and look for cycles")
    common(dy)
    dy.add_argument("--cap", type=int, default=DEFAULT_CAP)
    dy.set_defaults(func=cmd_dynamics)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InstanceError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (UsageError, GammaRangeError, InfeasibleSpecError, EnumerationError, NoStrategyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DegenerateGameError, MoveCapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
