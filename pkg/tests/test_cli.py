from __future__ import annotations

import argparse
import csv
import json
import subprocess
import sys

import pytest

from steppa.cli import (
    EXIT_BUDGET,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_NO_PATH,
    EXIT_OK,
    build_parser,
    main,
    split_seeds,
)
from steppa.planner.pipeline import PlannerConfig, prepare


def run(*argv) -> int:
    return main([str(a) for a in argv])


def read(path):
    with open(path) as fh:
        return json.load(fh)


def test_gen_scene_preset(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert run("gen-scene", "--preset", "stepping-stones", "--seed", 7, "-o", out) == EXIT_OK
    doc = read(out)
    assert doc["header"]["command"] == "gen-scene"
    assert doc["header"]["seed"] == 7
    assert doc["header"]["seeds"] == split_seeds(7)
    assert "primitives" in capsys.readouterr().out


def test_gen_scene_bad_h_max(tmp_path, capsys):
    assert run("gen-scene", "--preset", "sloped", "--h-max", -1, "-o", tmp_path / "s.json") == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "--h-max" in err and "h_max" in err
    assert not (tmp_path / "s.json").exists()


def test_config_error_is_line_anchored(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "scene": {"preset": "sloped"},\n  "label_policy": {\n    "h_max": 0\n  }\n}\n')
    assert run("gen-scene", "--config", cfg, "-o", tmp_path / "s.json") == EXIT_CONFIG
    assert "bad.json:4:" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"seed": 3, "scene": {"preset": "staircase"}}))
    assert run("gen-scene", "--config", cfg, "--seed", 4, "-o", tmp_path / "s.json") == EXIT_OK
    assert read(tmp_path / "s.json")["header"]["seed"] == 4


def test_gen_scene_deterministic(tmp_path):
    for name in ("a.json", "b.json"):
        assert run("gen-scene", "--mode", "scatter", "--seed", 11, "-o", tmp_path / name) == EXIT_OK
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert run("gen-scene", "--mode", "scatter", "--seed", 12, "-o", tmp_path / "c.json") == EXIT_OK
    assert (tmp_path / "a.json").read_bytes() != (tmp_path / "c.json").read_bytes()


def test_seed_split_is_stable_and_distinct():
    a = split_seeds(0)
    assert a == split_seeds(0)
    assert set(a) == {"scene", "jitter", "solver"}
    assert len(set(a.values())) == 3


def test_render_dataset_ten_scenes(tmp_path, capsys):
    out = tmp_path / "ds"
    assert run("render-dataset", "--generate", 10, "--frames", 5, "-o", out) == EXIT_OK
    assert len(list((out / "depth").glob("*.pfm"))) == 50
    assert len(list((out / "mask").glob("*.png"))) == 50
    entries = [json.loads(line) for line in (out / "manifest.jsonl").read_text().splitlines()]
    scenes = {}
    for e in entries:
        scenes.setdefault(e["split"], set()).add(e["scene_id"])
    assert {k: len(v) for k, v in scenes.items()} == {"train": 8, "val": 1, "test": 1}
    text = capsys.readouterr().out
    assert "manifest" in text and "train 8" in text


def test_render_dataset_one_frame(tmp_path):
    scene = tmp_path / "s.json"
    assert run("gen-scene", "--preset", "staircase", "-o", scene) == EXIT_OK
    assert run("render-dataset", "--scenes", scene, "--frames", 1, "-o", tmp_path / "ds") == EXIT_OK
    assert len((tmp_path / "ds" / "manifest.jsonl").read_text().splitlines()) == 1


def test_render_dataset_missing_scene(tmp_path, capsys):
    assert run("render-dataset", "--scenes", tmp_path / "nope.json", "-o", tmp_path / "ds") == EXIT_CONFIG
    assert "nope.json" in capsys.readouterr().err


def test_render_dataset_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("render-dataset", "--generate", 1, "--frames", 1, "-o", blocker / "ds") == EXIT_IO


def test_unwritable_output_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("gen-scene", "--preset", "sloped", "-o", blocker / "s.json") == EXIT_IO


def test_plan_with_steppability_avoids_non_passable(tmp_path):
    out = tmp_path / "p.json"
    assert run("plan", "--preset", "stepping-stones", "--lambda-step", 1, "-o", out) == EXIT_OK
    doc = read(out)
    assert doc["plan"]["edges"]
    assert doc["np_footholds"] == 0
    assert all(f["label"] != "NON_PASSABLE" for f in doc["footholds"])


def test_plan_without_steppability_is_flagged(tmp_path, capsys):
    out = tmp_path / "p.json"
    assert run("plan", "--preset", "stepping-stones", "--lambda-step", 0, "-o", out) == EXIT_OK
    doc = read(out)
    assert doc["np_footholds"] > 0
    assert sum(f["label"] == "NON_PASSABLE" for f in doc["footholds"]) == doc["np_footholds"]
    assert "NON_PASSABLE" in capsys.readouterr().out


def test_plan_goal_at_start_is_empty(tmp_path, stones):
    c = prepare(stones, PlannerConfig()).start.com()
    goal = ",".join(f"{v:.6f}" for v in (*c, 0.2))
    out = tmp_path / "p.json"
    assert run("plan", "--preset", "stepping-stones", f"--goal={goal}", "-o", out) == EXIT_OK
    assert read(out)["plan"]["edges"] == []


def test_plan_unreachable_goal(tmp_path, capsys):
    assert run("plan", "--preset", "stepping-stones", "--goal", "5,5,0.3,0.2", "-o", tmp_path / "p.json") == EXIT_NO_PATH
    assert "goal" in capsys.readouterr().err


def test_plan_with_to(tmp_path):
    out = tmp_path / "p.json"
    assert run("plan", "--preset", "staircase", "--with-to", "-o", out) == EXIT_OK
    doc = read(out)
    assert len(doc["transitions"]) == len(doc["plan"]["edges"])
    assert all(t["status"] in ("Converged", "MaxIter", "Infeasible") for t in doc["transitions"])


def test_navigate_staircase(tmp_path):
    out = tmp_path / "ep.json"
    assert run("navigate", "--preset", "staircase", "-o", out) == EXIT_OK
    report = read(out)["report"]
    assert report["success"] and report["replans"] >= 1
    rows = list(csv.reader((tmp_path / "ep.events.csv").open()))
    assert rows[0] == ["tick", "event", "payload"]
    assert len(rows) == len(report["events"]) + 1


def test_navigate_zero_budget(tmp_path):
    assert run("navigate", "--preset", "staircase", "--budget", 0, "-o", tmp_path / "ep.json") == EXIT_BUDGET
    assert read(tmp_path / "ep.json")["report"]["events"] == []


def test_navigate_bad_spawn(tmp_path, capsys):
    assert run("navigate", "--preset", "sloped", "--spawn", "x:sphere::0,0,0", "-o", tmp_path / "ep.json") == EXIT_CONFIG
    assert "--spawn" in capsys.readouterr().err


def test_bench_rows_per_mode(tmp_path):
    out = tmp_path / "bench.csv"
    assert run("bench", "--preset", "stepping-stones", "--trials", 2, "-o", out) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    per_mode = {}
    for r in rows:
        per_mode[r["mode"]] = per_mode.get(r["mode"], 0) + 1
    assert set(per_mode) == {"heuristic_on", "heuristic_off"}
    assert all(n <= 2 for n in per_mode.values())
    assert {"trial", "outcome", "path_cost", "search_time", "to_times"} <= set(rows[0])
    assert run("validate", out.with_suffix(".json")) == EXIT_OK


def test_validate_artifacts(tmp_path, capsys):
    scene = tmp_path / "s.json"
    run("gen-scene", "--preset", "sloped", "-o", scene)
    assert run("validate", scene) == EXIT_OK
    assert "valid scene" in capsys.readouterr().out
    plan = tmp_path / "p.json"
    run("plan", "--scene", scene, "-o", plan)
    assert run("validate", plan) == EXIT_OK
    broken = read(scene)
    broken["primitives"][0]["class"] = "blob"
    (tmp_path / "bad.json").write_text(json.dumps(broken))
    assert run("validate", tmp_path / "bad.json") == EXIT_CONFIG
    assert run("validate", tmp_path / "missing.json") == EXIT_IO


def _subparsers():
    parser = build_parser()
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return sub.choices


def test_help_lists_every_flag_with_default():
    for name, p in _subparsers().items():
        for action in p._actions:
            if not action.option_strings or action.dest == "help":
                continue
            assert "default:" in (action.help or ""), f"{name} {action.option_strings[0]}"
    # argparse renders the help text without crashing
    text = subprocess.run([sys.executable, "-m", "steppa.cli", "plan", "--help"], capture_output=True, text=True).stdout
    assert "(default: 1.0)" in text


def test_plan_deterministic(tmp_path):
    for name in ("a.json", "b.json"):
        assert run("plan", "--preset", "sloped", "-o", tmp_path / name) == EXIT_OK
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


@pytest.mark.parametrize("argv", [["plan"], ["plan", "--preset", "sloped", "--scene", "x.json"]])
def test_scene_source_required_and_exclusive(argv, capsys):
    assert run(*argv) == EXIT_CONFIG
    assert capsys.readouterr().err
