"""Command line entry point: check a scenario, run it, or dump its stages.

Exit codes: 0 success, 1 error diagnostics, 2 I/O or configuration failure,
3 simulated-time budget exhausted, 4 root Failure or a runtime fault.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import ast
from .btree import (
    ArbitrationFault,
    FAILURE,
    SUCCESS,
    dump_tree,
    required_ticks,
)
from .diagnostics import CompileError, Diagnostic
from .parser import parse
from .runtime import (
    BuildError,
    CompiledScenario,
    EvalError,
    InitConflict,
    SpawnCollision,
    UnsupportedAction,
    builtin_registry,
    compile_scenario,
)
from .semantics import check
from .world import SimFault, load_map

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_IO = 2
EXIT_TIMEOUT = 3
EXIT_FAULT = 4

_SEVERITY_COLORS = {"error": "\x1b[31m", "warning": "\x1b[33m"}
_RESET = "\x1b[0m"


def _use_color(stream) -> bool:
    mode = os.environ.get("OSC2C_COLOR", "auto")
    if mode == "always":
        return True
    if mode == "never":
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def _print_diagnostics(diagnostics: list[Diagnostic], stream=None) -> None:
    stream = stream if stream is not None else sys.stderr
    color = _use_color(stream)
    for diagnostic in diagnostics:
        line = diagnostic.render()
        if color:
            tint = _SEVERITY_COLORS.get(diagnostic.severity, "")
            line = f"{tint}{line}{_RESET}"
        print(line, file=stream)


def _fail_io(message: str) -> int:
    print(f"osc2c: {message}", file=sys.stderr)
    return EXIT_IO


def _read_source(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read().replace("\r\n", "\n")


def _round6(value: float) -> float:
    return round(float(value), 6)


def _write_record(stream, record: dict) -> None:
    stream.write(json.dumps(record, separators=(",", ":")) + "\n")


def _tick_record(cs: CompiledScenario, now: int) -> dict:
    actors = []
    for actor in cs.world.actors.values():
        actors.append({
            "name": actor.name,
            "x": _round6(actor.x),
            "y": _round6(actor.y),
            "heading": _round6(actor.heading),
            "lane": actor.lane,
            "speed": _round6(actor.speed),
            "lights": actor.lights,
        })
    return {
        "record": "tick",
        "tick": now,
        "t": _round6(now * cs.dt),
        "actors": actors,
        "events": [{"name": name, "first": first}
                   for name, first in cs.blackboard.emissions],
        "collisions": [list(pair) for pair in cs.world.collisions],
    }


def _summary_record(cs: CompiledScenario | None, outcome: str,
                    ticks: int) -> dict:
    events = []
    if cs is not None:
        ordered = sorted(cs.blackboard.events.items(),
                         key=lambda item: (item[1], item[0]))
        events = [{"name": name, "tick": tick} for name, tick in ordered]
    return {"record": "summary", "outcome": outcome, "ticks": ticks,
            "events": events}


def cmd_check(args) -> int:
    try:
        source = _read_source(args.file)
    except OSError as exc:
        return _fail_io(str(exc))
    analysis = check(source, args.file,
                     extra_actions=builtin_registry().action_table())
    _print_diagnostics(analysis.diagnostics)
    return EXIT_OK if analysis.ok else EXIT_DIAGNOSTICS


def cmd_run(args) -> int:
    try:
        source = _read_source(args.file)
    except OSError as exc:
        return _fail_io(str(exc))

    registry = builtin_registry()
    analysis = check(source, args.file,
                     extra_actions=registry.action_table())
    _print_diagnostics(analysis.diagnostics)
    if not analysis.ok:
        return EXIT_DIAGNOSTICS

    map_spec = args.map
    if map_spec is None:
        bound = analysis.scenarios[0].map_name if analysis.scenarios else None
        map_spec = f"builtin:{bound}" if bound else "builtin:town06"
    try:
        road = load_map(map_spec)
    except (OSError, ValueError) as exc:
        return _fail_io(str(exc))
    if args.dt <= 0:
        return _fail_io(f"--dt must be positive, got {args.dt}")

    fault: Exception | None = None
    cs: CompiledScenario | None = None
    try:
        cs = compile_scenario(analysis, registry=registry, road=road,
                              dt=args.dt, filename=args.file)
    except UnsupportedAction as exc:
        _print_diagnostics([exc.diagnostic])
        return EXIT_DIAGNOSTICS
    except (InitConflict, SpawnCollision, BuildError, EvalError,
            SimFault) as exc:
        fault = exc

    scenario_name = analysis.scenarios[0].decl.name
    if args.trace is not None:
        try:
            stream = open(args.trace, "w", encoding="utf-8")
        except OSError as exc:
            return _fail_io(str(exc))
    else:
        stream = sys.stdout
    try:
        _write_record(stream, {
            "record": "header",
            "scenario": scenario_name,
            "map": road.name,
            "dt": _round6(args.dt),
        })
        if fault is not None:
            _write_record(stream, {
                "record": "fault", "tick": 0,
                "error": type(fault).__name__, "message": str(fault),
            })
            _write_record(stream, _summary_record(cs, "fault", 0))
            return EXIT_FAULT
        return _run_loop(cs, stream, args.max_time)
    finally:
        if stream is not sys.stdout:
            stream.close()


def _run_loop(cs: CompiledScenario, stream, max_time: float) -> int:
    max_ticks = required_ticks(max_time, cs.dt)
    outcome = "timeout"
    exit_code = EXIT_TIMEOUT
    ticks_run = 0
    for _ in range(max_ticks):
        now = cs.next_tick
        try:
            status = cs.step_tick()
        except (SimFault, ArbitrationFault, EvalError) as exc:
            _write_record(stream, {
                "record": "fault", "tick": now,
                "error": type(exc).__name__, "message": str(exc),
            })
            outcome = "fault"
            exit_code = EXIT_FAULT
            break
        _write_record(stream, _tick_record(cs, now))
        ticks_run += 1
        if status is SUCCESS:
            outcome = "success"
            exit_code = EXIT_OK
            break
        if status is FAILURE:
            outcome = "failure"
            exit_code = EXIT_FAULT
            break
    _write_record(stream, _summary_record(cs, outcome, ticks_run))
    return exit_code


def cmd_dump(args) -> int:
    try:
        source = _read_source(args.file)
    except OSError as exc:
        return _fail_io(str(exc))

    if args.what == "ast":
        try:
            program = parse(source, args.file)
        except CompileError as exc:
            _print_diagnostics([exc.diagnostic])
            return EXIT_DIAGNOSTICS
        print(ast.dump_json(program))
        return EXIT_OK

    registry = builtin_registry()
    analysis = check(source, args.file,
                     extra_actions=registry.action_table())
    _print_diagnostics(analysis.diagnostics)
    if not analysis.ok:
        return EXIT_DIAGNOSTICS
    try:
        cs = compile_scenario(analysis, registry=registry,
                              filename=args.file, initialize=False)
    except UnsupportedAction as exc:
        _print_diagnostics([exc.diagnostic])
        return EXIT_DIAGNOSTICS
    print(dump_tree(cs.root))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="osc2c",
        description="Compile and execute scenario files on the built-in "
                    "kinematic traffic world.")
    sub = parser.add_subparsers(dest="command", required=True)

    check_parser = sub.add_parser(
        "check", help="parse and semantically check a scenario file")
    check_parser.add_argument("file", help="scenario source file")

    run_parser = sub.add_parser(
        "run", help="execute a scenario and write a tick-by-tick trace")
    run_parser.add_argument("file", help="scenario source file")
    run_parser.add_argument(
        "--map", default=None,
        help="road map, builtin:<name> or a JSON file "
             "(default: the map bound in the scenario)")
    run_parser.add_argument(
        "--dt", type=float, default=0.05,
        help="simulation step in seconds (default 0.05)")
    run_parser.add_argument(
        "--max-time", type=float, default=300.0, dest="max_time",
        help="simulated time budget in seconds (default 300)")
    run_parser.add_argument(
        "--trace", default=None,
        help="trace output file (default: stdout)")
    run_parser.add_argument(
        "--seed-less", action="store_true", dest="seed_less",
        help="accepted for interface parity; execution has no randomness")

    dump_parser = sub.add_parser(
        "dump", help="print the AST or the lowered behavior tree")
    dump_parser.add_argument("file", help="scenario source file")
    dump_parser.add_argument(
        "--what", choices=("ast", "bt"), required=True,
        help="which stage to dump")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"check": cmd_check, "run": cmd_run, "dump": cmd_dump}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
