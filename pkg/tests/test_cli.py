"""CLI tests: exit codes, diagnostics output, trace format, dumps."""

import json
from pathlib import Path

import pytest

from osc2c import ast
from osc2c.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
FLAGSHIP = str(SCENARIOS / "cut_in_and_evade.osc")
HANDSHAKE = str(SCENARIOS / "handshake_phases.osc")
MINIMAL = str(SCENARIOS / "minimal_wait.osc")


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_trace(path):
    records = [json.loads(line) for line in Path(path).read_text().splitlines()]
    assert records, "empty trace"
    return records


class TestCheck:
    def test_flagship_one_warning(self, capsys):
        assert main(["check", FLAGSHIP]) == 0
        err = capsys.readouterr().err
        lines = [line for line in err.splitlines() if line]
        assert len(lines) == 1
        assert "warning[W001]" in lines[0]

    def test_undefined_reference(self, tmp_path, capsys):
        path = write(tmp_path, "bad.osc",
                     "scenario s:\n  do serial:\n    wait ghost.speed > 1kph\n")
        assert main(["check", path]) == 1
        assert "error[E001]" in capsys.readouterr().err

    def test_missing_file(self, capsys):
        assert main(["check", "/no/such/file.osc"]) == 2

    def test_color_forced(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("OSC2C_COLOR", "always")
        assert main(["check", FLAGSHIP]) == 0
        assert "\x1b[33m" in capsys.readouterr().err

    def test_color_suppressed(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("OSC2C_COLOR", "never")
        assert main(["check", FLAGSHIP]) == 0
        assert "\x1b[" not in capsys.readouterr().err


class TestRun:
    def test_flagship_trace_contract(self, tmp_path):
        trace = str(tmp_path / "trace.ndjson")
        assert main(["run", FLAGSHIP, "--trace", trace]) == 0
        records = read_trace(trace)

        header = records[0]
        assert header["record"] == "header"
        assert header["dt"] == 0.05
        assert header["map"] == "town06"

        ticks = [r for r in records if r["record"] == "tick"]
        summary = records[-1]
        assert summary["record"] == "summary"
        assert summary["outcome"] == "success"
        assert summary["ticks"] == len(ticks)

        for i, record in enumerate(ticks):
            assert record["tick"] == i
            assert record["t"] == round(i * 0.05, 6)
        names = [a["name"] for a in ticks[0]["actors"]]
        assert names == ["hero", "npc", "obstacle"]

        timeline = {e["name"]: e["tick"] for e in summary["events"]}
        assert timeline["go_signal"] == 0
        assert 0 < timeline["CRASH_AVOIDED"] < timeline["OBSTACLE_DETECTED"]
        assert timeline["OBSTACLE_DETECTED"] < summary["ticks"]

        # each event carries first=true exactly once across the run
        firsts = {}
        for record in ticks:
            for event in record["events"]:
                if event["first"]:
                    firsts[event["name"]] = firsts.get(event["name"], 0) + 1
        assert firsts == {"go_signal": 1, "CRASH_AVOIDED": 1,
                          "OBSTACLE_DETECTED": 1}
        assert all(not r["collisions"] for r in ticks)

    def test_reruns_byte_identical(self, tmp_path):
        first = tmp_path / "a.ndjson"
        second = tmp_path / "b.ndjson"
        assert main(["run", FLAGSHIP, "--trace", str(first)]) == 0
        assert main(["run", FLAGSHIP, "--trace", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_timeout_exit_three(self, tmp_path):
        path = write(tmp_path, "stuck.osc",
                     "scenario stuck:\n  do serial:\n    wait @never\n")
        trace = str(tmp_path / "trace.ndjson")
        code = main(["run", path, "--trace", trace, "--max-time", "1"])
        assert code == 3
        records = read_trace(trace)
        assert records[-1]["outcome"] == "timeout"
        assert records[-1]["ticks"] == 20

    def test_off_map_fault_exit_four(self, tmp_path):
        path = write(tmp_path, "runaway.osc",
                     "scenario runaway:\n  a: vehicle\n  do serial:\n"
                     "    a.drive() with:\n      speed(200kph)\n")
        trace = str(tmp_path / "trace.ndjson")
        assert main(["run", path, "--trace", trace]) == 4
        records = read_trace(trace)
        faults = [r for r in records if r["record"] == "fault"]
        assert len(faults) == 1
        assert faults[0]["error"] == "OffMapFault"
        assert records[-1]["outcome"] == "fault"

    def test_spawn_collision_fault(self, tmp_path):
        path = write(
            tmp_path, "pileup.osc",
            "scenario pileup:\n  a: vehicle\n  b: vehicle\n  do serial:\n"
            "    a.assign_position() with:\n      lane(1, at: start)\n"
            "    b.assign_position() with:\n      lane(1, at: start)\n"
            "    wait elapsed(1s)\n")
        trace = str(tmp_path / "trace.ndjson")
        assert main(["run", path, "--trace", trace]) == 4
        records = read_trace(trace)
        assert records[1]["record"] == "fault"
        assert records[1]["error"] == "SpawnCollision"

    def test_unsupported_action_exit_one(self, tmp_path, capsys):
        path = write(tmp_path, "ped.osc",
                     "scenario s:\n  p: person\n  do serial:\n    p.walk()\n")
        assert main(["run", path, "--trace", str(tmp_path / "t")]) == 1
        assert "error[E007]" in capsys.readouterr().err

    def test_unknown_builtin_map(self, tmp_path):
        code = main(["run", MINIMAL, "--map", "builtin:atlantis",
                     "--trace", str(tmp_path / "t")])
        assert code == 2

    def test_custom_map_file(self, tmp_path):
        road = write(tmp_path, "strip.json", json.dumps({
            "name": "strip", "lane_count": 3, "lane_width": 4.0,
            "length": 2000.0, "spawns": [[0, 5], [1, 5], [2, 5]]}))
        trace = str(tmp_path / "trace.ndjson")
        assert main(["run", MINIMAL, "--map", road, "--trace", trace]) == 0
        assert read_trace(trace)[0]["map"] == "strip"

    def test_unwritable_trace(self):
        assert main(["run", MINIMAL, "--trace", "/no/such/dir/t.ndjson"]) == 2

    def test_bad_dt(self, tmp_path):
        assert main(["run", MINIMAL, "--dt", "0",
                     "--trace", str(tmp_path / "t")]) == 2

    def test_seed_less_accepted(self, tmp_path):
        trace = str(tmp_path / "trace.ndjson")
        assert main(["run", MINIMAL, "--seed-less", "--trace", trace]) == 0


class TestDump:
    def test_ast_minimal(self, capsys):
        assert main(["dump", MINIMAL, "--what", "ast"]) == 0
        out = capsys.readouterr().out
        document = json.loads(out)
        program = ast.from_dict(document)
        elapsed = []
        stack = [program]
        while stack:
            node = stack.pop()
            if isinstance(node, ast.ElapsedCondition):
                elapsed.append(node)
            if isinstance(node, ast.Node):
                import dataclasses
                for f in dataclasses.fields(node):
                    value = getattr(node, f.name)
                    stack.extend(value if isinstance(value, (list, tuple))
                                 else [value])
        assert len(elapsed) == 1

    def test_ast_dump_stable(self, capsys):
        assert main(["dump", FLAGSHIP, "--what", "ast"]) == 0
        first = capsys.readouterr().out
        assert main(["dump", FLAGSHIP, "--what", "ast"]) == 0
        second = capsys.readouterr().out
        assert first == second

    def test_ast_parse_error(self, tmp_path, capsys):
        path = write(tmp_path, "broken.osc", "scenario s\n")
        assert main(["dump", path, "--what", "ast"]) == 1
        assert "error[P001]" in capsys.readouterr().err

    def test_bt_minimal(self, capsys):
        assert main(["dump", MINIMAL, "--what", "bt"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("Sequence")
        assert lines[1].lstrip().startswith("Timer")
        assert len(lines) == 2

    def test_bt_top_level_parallel(self, capsys):
        assert main(["dump", HANDSHAKE, "--what", "bt"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("Parallel")
        branches = [line for line in lines
                    if line.startswith("  ") and not line.startswith("   ")]
        assert [b.strip().split("(")[0] for b in branches] == \
            ["Sequence", "Sequence"]

    def test_bt_dump_stable(self, capsys):
        assert main(["dump", HANDSHAKE, "--what", "bt"]) == 0
        first = capsys.readouterr().out
        assert main(["dump", HANDSHAKE, "--what", "bt"]) == 0
        second = capsys.readouterr().out
        assert first == second

    def test_bt_semantic_error(self, tmp_path, capsys):
        path = write(tmp_path, "bad.osc",
                     "scenario s:\n  do serial:\n    wait ghost.speed > 1kph\n")
        assert main(["dump", path, "--what", "bt"]) == 1
        assert "error[E001]" in capsys.readouterr().err

    def test_bt_unsupported_action(self, tmp_path, capsys):
        path = write(tmp_path, "ped.osc",
                     "scenario s:\n  p: person\n  do serial:\n    p.walk()\n")
        assert main(["dump", path, "--what", "bt"]) == 1
        assert "error[E007]" in capsys.readouterr().err
