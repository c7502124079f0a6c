"""Command-line entry point: ``steppa <subcommand> [flags]``.

Every subcommand reads an optional JSON config (``--config``); flags given on
the command line override it. Exit codes: 0 ok, 2 config, 3 I/O, 4 no path,
5 budget exhausted.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import os
import re
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NO_PATH, EXIT_BUDGET = 0, 2, 3, 4, 5

PRESETS = ("stepping-stones", "staircase", "sloped")
DEFAULT_COUNTS = {"cuboid": 2, "cylinder": 1, "ramp": 1, "sphere": 1, "semisphere": 1, "pole": 1}

DEFAULTS = {
    "seed": 0,
    "scene": {},
    "camera": {},
    "label_policy": {"h_max": 0.10},
    "dataset": {"frames": 5, "ratios": [0.8, 0.1, 0.1], "jitter_position": 0.01, "jitter_rotation": 0.0175},
    "planner": {"lambda": [1.0, 1.0, 1.0, 1.0], "resolution": 0.05, "foot_radius": 0.02, "with_to": False},
    "trajopt": {},
    "nav": {"lookahead": 2, "tick_budget": 200, "spawn": [], "trials": 20},
}


class ConfigError(Exception):
    pass


class OutputError(Exception):
    pass


# ---------------------------------------------------------------- config


def split_seeds(root: int) -> dict:
    """Independent child seeds per subsystem, derived from the root seed."""
    names = ("scene", "jitter", "solver")
    children = np.random.SeedSequence(int(root)).spawn(len(names))
    return {n: int(c.generate_state(1)[0]) for n, c in zip(names, children)}


def output_header(command: str, cfg: dict) -> dict:
    return {"command": command, "version": __version__, "seed": cfg["seed"], "seeds": split_seeds(cfg["seed"])}


def _schema(name: str) -> dict:
    return json.loads(resources.files("steppa.schemas").joinpath(f"{name}.json").read_text())


def _locate(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return None if m is None else text.count("\n", 0, m.start()) + 1


def _path_str(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


class Settings:
    """Defaults, overlaid by a config file, overlaid by flags; remembers where each value came from."""

    def __init__(self):
        self.data = copy.deepcopy(DEFAULTS)
        self.file: str | None = None
        self.text = ""
        self.from_flags: dict = {}  # config path -> flag name

    def load_file(self, path: str) -> None:
        try:
            self.text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
        try:
            d = json.loads(self.text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        if not isinstance(d, dict):
            raise ConfigError(f"{path}:1: config must be a JSON object")
        self.file = path
        _deep_update(self.data, d)

    def set(self, path: tuple, value, flag: str) -> None:
        node = self.data
        for p in path[:-1]:
            node = node.setdefault(p, {})
        node[path[-1]] = value
        self.from_flags[path] = flag

    def error(self, path, message: str) -> ConfigError:
        path = tuple(path)
        for k in range(len(path), 0, -1):
            flag = self.from_flags.get(path[:k])
            if flag:
                return ConfigError(f"{flag}: {_path_str(path)} {message}")
        if self.file:
            keys = [p for p in path if isinstance(p, str)]
            line = _locate(self.text, keys[-1]) if keys else None
            return ConfigError(f"{self.file}:{line or 1}: {_path_str(path)} {message}")
        return ConfigError(f"{_path_str(path)} {message}")

    def validate(self) -> None:
        validator = jsonschema.Draft202012Validator(_schema("run_config"))
        errors = sorted(validator.iter_errors(self.data), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
        if errors:
            e = errors[0]
            raise self.error(e.absolute_path, _short(e))

    def get(self, *path, default=None):
        node = self.data
        for p in path:
            if not isinstance(node, dict) or p not in node:
                return default
            node = node[p]
        return node


def _short(e: jsonschema.ValidationError) -> str:
    if e.validator == "exclusiveMinimum":
        return f"must be > {e.validator_value}, got {e.instance!r}"
    if e.validator == "minimum":
        return f"must be >= {e.validator_value}, got {e.instance!r}"
    if e.validator == "enum":
        return f"must be one of {', '.join(map(str, e.validator_value))}, got {e.instance!r}"
    if e.validator == "additionalProperties":
        return "has unknown field(s): " + ", ".join(sorted(set(e.instance) - set(e.schema.get("properties", {}))))
    return e.message


def _deep_update(base: dict, new: dict) -> None:
    for k, v in new.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_update(base[k], v)
        else:
            base[k] = v


# ---------------------------------------------------------------- argument parsing

_FLAG_PATHS: dict = {}


def _opt(parser, *names, path, default=None, help="", **kw):
    """Flag bound to a config path; the documented default lives in DEFAULTS."""
    shown = default
    if shown is None and path is not None:
        node = DEFAULTS
        for p in path:
            node = node.get(p, {}) if isinstance(node, dict) else {}
        shown = node if node != {} else None
    text = help + f" (default: {'none' if shown is None else shown})"
    action = parser.add_argument(*names, default=None, help=text, **kw)
    _FLAG_PATHS[action.dest] = (path, names[0])
    return action


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _common(p):
    p.add_argument("--config", default=None, help="JSON run config; flags override its values (default: none)")
    _opt(p, "--seed", path=("seed",), type=int, help="root seed, split per subsystem")
    _opt(p, "-o", "--output", path=("output",), default="stdout", help="output path")


def _scene_flags(p, files: bool = False, preset: str | None = None):
    _opt(p, "--preset", path=("scene", "preset"), default=preset, choices=PRESETS, help="built-in evaluation scene")
    _opt(p, "--scene", path=("scene", "file"), help="scene JSON file")
    if files:
        _opt(p, "--scenes", path=("scene", "files"), nargs="+", help="scene JSON files")
    _opt(p, "--h-max", path=("label_policy", "h_max"), type=float, help="maximum swing height for labelling (m)")


def _generator_flags(p):
    _opt(p, "--mode", path=("scene", "generator", "mode"), choices=("cluster", "scatter"), help="placement mode", default="scatter")
    _opt(p, "--count", path=("scene", "generator", "counts"), action="append", metavar="CLASS=N", help="primitive count per class, repeatable", default=",".join(f"{k}={v}" for k, v in DEFAULT_COUNTS.items()))
    _opt(p, "--environment", path=("scene", "generator", "environment"), choices=("indoor", "outdoor"), help="environment", default="outdoor")


def _planner_flags(p):
    _opt(p, "--lambda-d", path=None, type=float, default=1.0, help="weight of the experience term")
    _opt(p, "--lambda-com", path=None, type=float, default=1.0, help="weight of the CoM travel term")
    _opt(p, "--lambda-tau", path=None, type=float, default=1.0, help="weight of the torso-path deviation term")
    _opt(p, "--lambda-step", path=None, type=float, default=1.0, help="weight of the steppability term")
    _opt(p, "--resolution", path=("planner", "resolution"), type=float, help="foothold lattice spacing (m)")
    _opt(p, "--foot-radius", path=("planner", "foot_radius"), type=float, help="foothold inflation radius (m)")
    p.add_argument("--with-to", action="store_true", default=None, help="solve a transition optimisation per edge (default: False)")
    _FLAG_PATHS["with_to"] = (("planner", "with_to"), "--with-to")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="steppa", description="Steppability-aware footstep planning toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scene", help="write a scene JSON")
    _common(p)
    _scene_flags(p)
    _generator_flags(p)

    p = sub.add_parser("render-dataset", help="render depth and steppability masks for scenes")
    _common(p)
    _scene_flags(p, files=True)
    _generator_flags(p)
    _opt(p, "--generate", path=("scene", "generate"), type=int, help="number of generated scenes when no files are given")
    _opt(p, "--frames", path=("dataset", "frames"), type=int, help="frames per scene")
    _opt(p, "--ratios", path=("dataset", "ratios"), type=_floats, help="train,val,test scene fractions")
    _opt(p, "--jitter-pos", path=("dataset", "jitter_position"), type=float, help="camera position jitter std (m)")
    _opt(p, "--jitter-rot", path=("dataset", "jitter_rotation"), type=float, help="camera rotation jitter std (rad)")

    p = sub.add_parser("plan", help="plan a foothold sequence from the scene start to its goal")
    _common(p)
    _scene_flags(p)
    _planner_flags(p)
    _opt(p, "--goal", path=("planner", "goal"), type=_floats, default="the scene goal", help="goal override x,y,z,radius")

    p = sub.add_parser("navigate", help="run a navigation episode with replanning")
    _common(p)
    _scene_flags(p)
    _planner_flags(p)
    _opt(p, "--spawn", path=("nav", "spawn"), action="append", metavar="TICK:CLASS:PARAMS:POSE", help="scripted obstacle, e.g. 15:sphere:radius=0.06:-0.475,0.125,0.1125")
    _opt(p, "--budget", path=("nav", "tick_budget"), type=int, help="tick budget")
    _opt(p, "--lookahead", path=("nav", "lookahead"), type=int, help="upcoming footholds checked per tick")
    _opt(p, "--events-csv", path=None, default="next to the report", help="event log CSV path")
    p.add_argument("--timing", action="store_true", help="include wall-clock times in the report (default: False)")

    p = sub.add_parser("bench", help="offline trials with the steppability term on and off")
    _common(p)
    _scene_flags(p, preset="stepping-stones")
    _planner_flags(p)
    _opt(p, "--trials", path=("nav", "trials"), type=int, help="maximum trials per mode")

    p = sub.add_parser("validate", help="schema-check a JSON artifact")
    p.add_argument("file", help="artifact to check (.json or manifest .jsonl)")
    p.add_argument(
        "--kind",
        choices=("scene", "plan", "episode", "trials", "manifest", "solution", "experience", "frame_meta", "run_config"),
        default=None,
        help="artifact kind (default: inferred from content)",
    )
    return ap


def settings_from_args(args) -> Settings:
    s = Settings()
    if getattr(args, "config", None):
        s.load_file(args.config)
    lam_flags = ("lambda_d", "lambda_com", "lambda_tau", "lambda_step")
    for dest, (path, flag) in _FLAG_PATHS.items():
        if not hasattr(args, dest):
            continue
        v = getattr(args, dest)
        if v is None or path is None:
            continue
        if dest == "count":
            counts = {}
            for item in v:
                for part in filter(None, item.split(",")):
                    k, _, n = part.partition("=")
                    try:
                        counts[k.strip()] = int(n)
                    except ValueError:
                        raise ConfigError(f"--count: expected CLASS=N, got {part!r}") from None
            v = counts
        s.set(path, v, flag)
    lam = list(s.get("planner", "lambda"))
    for i, dest in enumerate(lam_flags):
        v = getattr(args, dest, None)
        if v is not None:
            lam[i] = v
            s.set(("planner", "lambda"), lam, "--" + dest.replace("_", "-"))
    s.validate()
    return s


# ---------------------------------------------------------------- object construction


def _policy(s: Settings):
    from .geometry.primitives import LabelPolicyConfig

    return LabelPolicyConfig(h_max=float(s.get("label_policy", "h_max")))


def _intrinsics(s: Settings):
    from .camera import Intrinsics

    cam = {k: v for k, v in s.get("camera", default={}).items() if k in ("fx", "fy", "cx", "cy", "width", "height")}
    try:
        return Intrinsics(**cam)
    except (TypeError, ValueError) as exc:
        raise s.error(("camera",), str(exc)) from None


def _render(s: Settings, base):
    from dataclasses import replace

    cam = s.get("camera", default={})
    kw = {k: float(cam[k]) for k in ("min_range", "max_range") if k in cam}
    try:
        return replace(base, **kw)
    except ValueError as exc:
        raise s.error(("camera",), str(exc)) from None


def _to_config(s: Settings):
    from .trajopt import TOConfig

    try:
        return TOConfig(**s.get("trajopt", default={}))
    except (TypeError, ValueError) as exc:
        raise s.error(("trajopt",), str(exc)) from None


def _planner_config(s: Settings):
    from .planner import PlannerConfig

    return PlannerConfig(
        resolution=float(s.get("planner", "resolution")),
        lam=tuple(float(x) for x in s.get("planner", "lambda")),
        foot_radius=float(s.get("planner", "foot_radius")),
    )


def _read_scene(path: str, s: Settings):
    from .geometry.scene import SceneError, scene_from_dict

    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read scene: {exc.strerror}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    try:
        jsonschema.validate(d, _schema("scene"))
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{path}: {_path_str(exc.absolute_path)} {_short(exc)}") from None
    if "label_policy" in s.from_flags_paths():
        d["label_policy"] = {"h_max": s.get("label_policy", "h_max")}
    try:
        return scene_from_dict(d)
    except (SceneError, ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: invalid scene: {exc}") from None


Settings.from_flags_paths = lambda self: {p[0] for p in self.from_flags}


def _generated_scene(s: Settings, seed: int):
    from .geometry.scene import SceneConfig, SceneError, assemble_scene

    gen = dict(s.get("scene", "generator", default={}))
    gen.setdefault("counts", dict(DEFAULT_COUNTS))
    try:
        cfg = SceneConfig.from_dict({**gen, "seed": int(seed)})
        return assemble_scene(cfg, _policy(s))
    except (SceneError, ValueError) as exc:
        raise s.error(("scene", "generator"), str(exc)) from None


def _single_scene(s: Settings, allow_generator: bool = False):
    from .geometry.presets import preset_scene

    preset, file = s.get("scene", "preset"), s.get("scene", "file")
    if preset and file:
        raise s.error(("scene", "file"), "conflicts with scene.preset; give one scene source")
    seed = split_seeds(s.get("seed"))["scene"]
    if preset:
        return preset_scene(preset, _policy(s), seed=seed)
    if file:
        return _read_scene(file, s)
    if allow_generator:
        return _generated_scene(s, seed)
    raise ConfigError("no scene given: use --preset or --scene (or scene.preset / scene.file in the config)")


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        p = Path(path)
        if p.parent and not p.parent.exists():
            p.parent.mkdir(parents=True)
        p.write_text(text)
    except OSError as exc:
        raise OutputError(f"{path}: cannot write: {exc.strerror}") from None


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- commands


def cmd_gen_scene(args) -> int:
    s = settings_from_args(args)
    scene = _single_scene(s, allow_generator=True)
    d = scene.to_dict()
    d["header"] = output_header("gen-scene", s.data)
    out = s.get("output")
    _write(out, _dumps(d))
    counts: dict = {}
    for p in scene.primitives:
        counts[p.shape.value] = counts.get(p.shape.value, 0) + 1
    summary = ", ".join(f"{k} {v}" for k, v in counts.items())
    print(f"wrote {out or 'stdout'}: {len(scene.primitives)} primitives ({summary})", file=sys.stderr if not out else sys.stdout)
    return EXIT_OK


def cmd_render_dataset(args) -> int:
    from .camera import JitterConfig
    from .render import ExportError, RenderConfig, TrajectoryConfig, export_dataset

    s = settings_from_args(args)
    seeds = split_seeds(s.get("seed"))
    files = s.get("scene", "files") or ([s.get("scene", "file")] if s.get("scene", "file") else [])
    if files:
        scenes = [_read_scene(f, s) for f in files]
    elif s.get("scene", "preset"):
        scenes = [_single_scene(s)]
    else:
        n = int(s.get("scene", "generate", default=10))
        children = np.random.SeedSequence(seeds["scene"]).spawn(n)
        scenes = [_generated_scene(s, int(c.generate_state(1)[0])) for c in children]
    ds = s.get("dataset")
    jp, jr = float(ds["jitter_position"]), float(ds["jitter_rotation"])
    out = s.get("output") or "dataset"
    try:
        manifest = export_dataset(
            scenes,
            TrajectoryConfig(frames_per_scene=int(ds["frames"])),
            JitterConfig(jp, jp, jp, jr, jr, jr),
            tuple(ds["ratios"]),
            out,
            seed=seeds["jitter"],
            intrinsics=_intrinsics(s),
            render=_render(s, RenderConfig()),
        )
    except ExportError as exc:
        raise OutputError(str(exc)) from None
    except OSError as exc:
        raise OutputError(f"{out}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise s.error(("dataset",), str(exc)) from None
    counts = manifest.split_counts()
    print(f"manifest {manifest.path}")
    print(f"scenes {len(scenes)} frames {len(manifest.entries)} split train {counts['train']} val {counts['val']} test {counts['test']}")
    return EXIT_OK


def _goal_override(s: Settings):
    from .geometry.scene import GoalRegion

    g = s.get("planner", "goal")
    if g is None:
        return None
    try:
        return GoalRegion((g[0], g[1], g[2]), g[3])
    except ValueError as exc:
        raise s.error(("planner", "goal"), str(exc)) from None


def cmd_plan(args) -> int:
    from .nav.perception import camera_pose
    from .planner import GraphError, MaskContext, NoPath, plan, prepare
    from .render import PLANNING_RENDER, QueryLabel, raycast_frame
    from .trajopt import solve_transition

    s = settings_from_args(args)
    scene = _single_scene(s)
    pcfg = _planner_config(s)
    goal = _goal_override(s)
    K = _intrinsics(s)
    try:
        problem = prepare(scene, pcfg, goal=goal)
    except GraphError as exc:
        print(f"no path: {exc}", file=sys.stderr)
        return EXIT_NO_PATH
    pose = camera_pose(problem.start)
    frame = raycast_frame(scene, K, pose, _render(s, PLANNING_RENDER))
    ctx = MaskContext(frame.mask, K, pose, pcfg.foot_radius)
    try:
        result = plan(problem, ctx, None, pcfg.lam)
    except NoPath as exc:
        st = exc.stats
        print(
            f"no path: expanded {st.nodes_expanded}/{st.n_vertices} vertices, frontier {st.frontier_size}, edges {st.n_edges}",
            file=sys.stderr,
        )
        return EXIT_NO_PATH
    labels = ctx.center_labels(result.landings()) if result.edges else []
    footholds = [
        {
            "edge": i,
            "foot": e.swing_foot.name,
            "position": [float(c) for c in e.landing],
            "label": QueryLabel(int(lab)).name,
        }
        for i, (e, lab) in enumerate(zip(result.edges, labels))
    ]
    n_np = sum(f["label"] == "NON_PASSABLE" for f in footholds)
    doc = {"header": output_header("plan", s.data), "plan": result.to_dict(), "footholds": footholds, "np_footholds": n_np}
    to_times = []
    if s.get("planner", "with_to"):
        tcfg = _to_config(s)
        sols = []
        for e in result.edges:
            sol = solve_transition(e.source, e.dest, scene, tcfg)
            to_times.append(sol.wall_time)
            sols.append(sol.to_dict())
        doc["transitions"] = sols
    _write(s.get("output"), _dumps(doc))

    terms = np.array([[t.D, t.d_com, t.d_tau, t.d_step] for t in result.terms]) if result.terms else np.zeros((0, 4))
    tot = terms.sum(axis=0) if len(terms) else np.zeros(4)
    report = sys.stdout if s.get("output") else sys.stderr
    print(f"edges {len(result.edges)} cost {result.total_cost:.6g}", file=report)
    print(f"  D {tot[0]:.6g}  d_com {tot[1]:.6g}  d_tau {tot[2]:.6g}  d_step {tot[3]:.6g}", file=report)
    if n_np:
        print(f"  WARNING {n_np} foothold(s) land on NON_PASSABLE pixels", file=report)
    print(
        f"graph {result.stats.n_vertices} vertices {result.stats.n_edges} edges, search {result.stats.wall_time * 1e3:.2f} ms",
        file=report,
    )
    if to_times:
        statuses = [d["status"] for d in doc["transitions"]]
        print(f"TO {len(to_times)} solves, {sum(to_times):.2f} s total, {statuses.count('Infeasible')} infeasible", file=report)
    return EXIT_OK


def cmd_navigate(args) -> int:
    from .geometry.scene import SceneError
    from .nav import NavConfig, events_to_csv, parse_spawns, run_episode
    from .render import PLANNING_RENDER

    s = settings_from_args(args)
    scene = _single_scene(s)
    try:
        script = parse_spawns(s.get("nav", "spawn"))
    except ValueError as exc:
        raise s.error(("nav", "spawn"), str(exc)) from None
    cfg = NavConfig(
        lookahead=int(s.get("nav", "lookahead")),
        tick_budget=int(s.get("nav", "tick_budget")),
        planner=_planner_config(s),
        render=_render(s, PLANNING_RENDER),
        intrinsics=_intrinsics(s),
        with_to=bool(s.get("planner", "with_to")),
        to=_to_config(s),
    )
    try:
        report = run_episode(scene, script, cfg)
    except SceneError as exc:
        raise s.error(("nav", "spawn"), f"cannot spawn: {exc}") from None
    doc = {"header": output_header("navigate", s.data), "report": report.to_dict(include_time=args.timing)}
    out = s.get("output")
    _write(out, _dumps(doc))
    csv_path = args.events_csv or (str(Path(out).with_suffix(".events.csv")) if out and out != "-" else None)
    if csv_path:
        _write(csv_path, events_to_csv(report.events))
    stream = sys.stdout if out else sys.stderr
    kinds = [e.kind.value for e in report.events]
    summary = ", ".join(f"{k} {kinds.count(k)}" for k in dict.fromkeys(kinds))
    print(f"{'success' if report.success else 'failure'} after {report.ticks} ticks, {report.replans} replans ({summary or 'no events'})", file=stream)
    if report.success:
        return EXIT_OK
    if kinds and kinds[-1] == "PlanFailed":
        return EXIT_NO_PATH
    return EXIT_BUDGET


TRIAL_COLUMNS = ("mode", "trial", "outcome", "failed_at_edge", "path_cost", "np_footholds", "search_time", "to_time_total", "to_times")


def trials_csv(modes: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_COLUMNS)
    for mode, reports in modes.items():
        for r in reports:
            w.writerow(
                [
                    mode,
                    r.trial,
                    "success" if r.success else (f"failed@{r.failed_at_edge}" if r.failed_at_edge is not None else "no-plan"),
                    "" if r.failed_at_edge is None else r.failed_at_edge,
                    "" if r.path_cost is None else f"{r.path_cost:.6f}",
                    r.np_footholds,
                    f"{r.search_time:.6f}",
                    f"{sum(r.to_times):.6f}",
                    " ".join(f"{t:.4f}" for t in r.to_times),
                ]
            )
    return buf.getvalue()


def cmd_bench(args) -> int:
    from .nav import TrialConfig, run_offline_trials

    s = settings_from_args(args)
    if not s.get("scene", "preset") and not s.get("scene", "file"):
        s.set(("scene", "preset"), "stepping-stones", "--preset")
    scene = _single_scene(s)
    pcfg = _planner_config(s)
    step = pcfg.lam[3] if pcfg.lam[3] > 0 else 1.0
    tcfg = TrialConfig(planner=pcfg, to=_to_config(s), step_weight=step)
    n = int(s.get("nav", "trials"))
    t0 = time.perf_counter()
    modes = {}
    for name, on in (("heuristic_on", True), ("heuristic_off", False)):
        modes[name] = run_offline_trials(scene, n, on, config=tcfg)
    wall = time.perf_counter() - t0
    out = s.get("output")
    _write(out, trials_csv(modes))
    if out and out != "-":
        doc = {"header": output_header("bench", s.data), "modes": {k: [r.to_dict(True) for r in v] for k, v in modes.items()}}
        _write(str(Path(out).with_suffix(".json")), _dumps(doc))
    stream = sys.stdout if out else sys.stderr
    for name, reports in modes.items():
        first = next((r.trial for r in reports if r.success), None)
        worst = max((r.search_time for r in reports), default=0.0)
        print(f"{name}: {len(reports)} trials, first success {first}, max search {worst * 1e3:.2f} ms", file=stream)
    print(f"total {wall:.1f} s", file=stream)
    return EXIT_OK


def infer_kind(doc) -> str:
    if isinstance(doc, dict):
        if "primitives" in doc:
            return "scene"
        if "plan" in doc:
            return "plan"
        if "report" in doc:
            return "episode"
        if "modes" in doc:
            return "trials"
        if "knots" in doc:
            return "solution"
        if "table" in doc and "D0" in doc:
            return "experience"
        if "intrinsics" in doc and "pose" in doc:
            return "frame_meta"
    return "run_config"


def cmd_validate(args) -> int:
    path = Path(args.file)
    try:
        text = path.read_text()
    except OSError as exc:
        print(f"{path}: cannot read: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    kind = args.kind or ("manifest" if path.suffix == ".jsonl" else None)
    docs = []
    try:
        if kind == "manifest":
            docs = [(i + 1, json.loads(line)) for i, line in enumerate(text.splitlines()) if line.strip()]
        else:
            docs = [(None, json.loads(text))]
    except json.JSONDecodeError as exc:
        print(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}", file=sys.stderr)
        return EXIT_CONFIG
    kind = kind or infer_kind(docs[0][1])
    schema = _schema("manifest_entry" if kind == "manifest" else kind)
    validator = jsonschema.Draft202012Validator(schema)
    for line, doc in docs:
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
        if errors:
            e = errors[0]
            where = line if line is not None else (_locate(text, str(e.absolute_path[-1])) if e.absolute_path and isinstance(e.absolute_path[-1], str) else None)
            print(f"{path}:{where or 1}: {kind}: {_path_str(e.absolute_path)} {_short(e)}", file=sys.stderr)
            return EXIT_CONFIG
    print(f"{path}: valid {kind}" + (f" ({len(docs)} entries)" if kind == "manifest" else ""))
    return EXIT_OK


COMMANDS = {
    "gen-scene": cmd_gen_scene,
    "render-dataset": cmd_render_dataset,
    "plan": cmd_plan,
    "navigate": cmd_navigate,
    "bench": cmd_bench,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutputError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
