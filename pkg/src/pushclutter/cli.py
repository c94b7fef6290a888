"""Command line front end.

Exit codes: 0 on success, 1 when a run fails or a replay does not
check out, 2 on usage errors (argparse's own convention).
"""

import argparse
import json
import sys
import threading
from pathlib import Path

from .benchmark import (
    run_benchmark, summarize, summary_table, write_records,
)
from .dynamics import Control, rollout_controls
from .grtc import Budgets, ITERATIONS, PlannerConfig, WALL, run_grtc
from .protocol import HITL, MODES
from .scene import (
    ReachGoalObject, generate_random_scene, goal_satisfied, load_scene,
    parse_scene, save_scene, serialize_scene,
)
from .service import build_strategy, resolve_algorithm, serve
from .strategies import (
    HumanBridgeStrategy, OperatorScript, ScriptParseError, save_script,
)

CONTROLS_VERSION = 1

# replay tolerance: controls round-trip exactly through JSON, so the
# rollout is reproducible; the slack only covers libm variation
REPLAY_TOL = 1e-9


def _add_budget_args(p):
    p.add_argument("--overall", type=float, default=300.0,
                   help="total budget (seconds or iterations)")
    p.add_argument("--pushing", type=float, default=10.0,
                   help="per-phase budget for a single action")
    p.add_argument("--budget-mode", choices=(WALL, ITERATIONS),
                   default=WALL, dest="budget_mode")


def _budgets(args) -> Budgets:
    return Budgets(args.overall, args.pushing, args.budget_mode)


def _fail(message: str) -> int:
    print(message, file=sys.stderr)
    return 1


# -- gen-scenes -------------------------------------------------------------

def cmd_gen_scenes(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        seed = args.seed + i
        scene = generate_random_scene(seed, n_movables=args.objects)
        path = out / f"scene_{seed:04d}.yaml"
        save_scene(scene, path)
        print(path)
    return 0


# -- plan / record ----------------------------------------------------------

def _controls_payload(scene, mode, algorithm, seed, budgets, outcome) -> dict:
    final = outcome.final_state
    return {
        "controls_version": CONTROLS_VERSION,
        "scene": serialize_scene(scene),
        "mode": mode,
        "algorithm": algorithm,
        "seed": seed,
        "budgets": {"overall": budgets.overall, "pushing": budgets.pushing,
                    "mode": budgets.mode},
        "status": outcome.status,
        "controls": [[u.vx, u.vy, u.omega, u.duration]
                     for u in outcome.full_controls],
        "final": {"robot": [final.robot.x, final.robot.y, final.robot.theta],
                  "objects": {oid: [p.x, p.y, p.theta]
                              for oid, p in final.objects.items()}},
    }


def _print_outcome(outcome) -> None:
    print(f"status: {outcome.status}")
    for i, e in enumerate(outcome.executed_actions, start=1):
        verdict = "ok" if e.success else "failed"
        if e.action.centroid is None:
            what = f"reach goal via {e.action.object}"
        else:
            cx, cy = e.action.centroid
            what = f"push {e.action.object} -> ({cx:.3f}, {cy:.3f})"
        print(f"  [{i}] {what}  {verdict}  plan={e.plan_time:.3f}")
    print(f"planning: {outcome.planning_time:.3f}")
    print(f"guidance: {outcome.guidance_time:.3f}")
    print(f"controls: {len(outcome.full_controls)}")


def cmd_plan(args) -> int:
    scene = load_scene(args.scene)
    if args.mode == HITL:
        return _fail("plan is non-interactive; use 'record' for hitl runs")
    budgets = _budgets(args)
    algorithm = resolve_algorithm(args.mode, args.algorithm)
    config = PlannerConfig(algorithm=algorithm, seed=args.seed)
    script_text = None
    if args.script:
        script_text = Path(args.script).read_text(encoding="utf-8")
    try:
        strategy = build_strategy(args.mode, scene, args.seed, config,
                                  script_text=script_text)
    except (ValueError, ScriptParseError) as e:
        return _fail(str(e))
    outcome = run_grtc(scene, strategy, budgets, config)
    _print_outcome(outcome)
    if args.save_controls:
        payload = _controls_payload(scene, args.mode, algorithm, args.seed,
                                    budgets, outcome)
        Path(args.save_controls).write_text(
            json.dumps(payload, indent=1) + "\n", encoding="utf-8")
        print(f"controls: wrote {args.save_controls}")
    return 0 if outcome.succeeded else 1


def cmd_record(args) -> int:
    scene = load_scene(args.scene)
    budgets = _budgets(args)
    config = PlannerConfig(algorithm=resolve_algorithm(HITL, args.algorithm),
                           seed=args.seed)
    bridge = HumanBridgeStrategy(
        scene.goal_id(), on_error=lambda m: print(f"! {m}", file=sys.stderr))
    result = {}

    def planner():
        try:
            result["outcome"] = run_grtc(scene, bridge, budgets, config)
        except Exception as e:
            result["error"] = f"{type(e).__name__}: {e}"

    worker = threading.Thread(target=planner, daemon=True)
    worker.start()
    print("commands: select <object> | point <x> <y> | goal | abort",
          file=sys.stderr)
    for line in sys.stdin:
        parts = line.split()
        if not parts:
            continue
        cmd = parts[0]
        if cmd == "select" and len(parts) == 2:
            oid = parts[1]
            if any(s.id == oid for s in scene.movable_specs()):
                bridge.select(oid)
            else:
                print(f"! unknown object {oid}", file=sys.stderr)
        elif cmd == "point" and len(parts) == 3:
            try:
                bridge.point(float(parts[1]), float(parts[2]))
            except ValueError:
                print("! point takes two numbers", file=sys.stderr)
        elif cmd == "goal" and len(parts) == 1:
            bridge.select(scene.goal_id())
        elif cmd == "abort" and len(parts) == 1:
            bridge.close()
            break
        else:
            print(f"! unrecognized command: {line.strip()}", file=sys.stderr)
        if not worker.is_alive():
            break
    else:
        bridge.close()
    worker.join()
    if "outcome" not in result:
        return _fail(f"session crashed: {result.get('error', 'unknown')}")
    outcome = result["outcome"]
    _print_outcome(outcome)
    if not outcome.succeeded:
        return 1
    entries = [e.action for e in outcome.executed_actions if e.success]
    save_script(OperatorScript(tuple(entries)), args.out)
    print(f"script: wrote {args.out}")
    return 0


# -- replay -----------------------------------------------------------------

def _pose_close(pose, triple) -> bool:
    return (abs(pose.x - triple[0]) <= REPLAY_TOL
            and abs(pose.y - triple[1]) <= REPLAY_TOL
            and abs(pose.theta - triple[2]) <= REPLAY_TOL)


def cmd_replay(args) -> int:
    data = json.loads(Path(args.controls).read_text(encoding="utf-8"))
    if data.get("controls_version") != CONTROLS_VERSION:
        return _fail("unsupported controls file")
    scene = parse_scene(data["scene"])
    controls = [Control(*u) for u in data["controls"]]
    trajectory, report = rollout_controls(scene.initial_configuration(),
                                          controls, scene)
    if not report.valid:
        what = "; ".join(f"{v.kind} on {v.body}" for v in report.violations)
        return _fail(f"replay hit an invalid state: {what}")
    final = trajectory[-1]
    expect = data["final"]
    ok = _pose_close(final.robot, expect["robot"]) and \
        set(final.objects) == set(expect["objects"]) and \
        all(_pose_close(final.objects[oid], expect["objects"][oid])
            for oid in final.objects)
    if not ok:
        return _fail("replay diverged from the recorded final state")
    if data["status"] == "success" and \
            not goal_satisfied(final, ReachGoalObject(), scene):
        return _fail("recorded success but the goal is not satisfied")
    print(f"replay ok: {len(controls)} controls, status {data['status']}")
    return 0


# -- benchmark --------------------------------------------------------------

def _parse_seeds(spec: str) -> list:
    if ":" in spec:
        lo, hi = spec.split(":", 1)
        return list(range(int(lo), int(hi)))
    if "," in spec:
        return [int(s) for s in spec.split(",")]
    return list(range(int(spec)))


def cmd_benchmark(args) -> int:
    paths = sorted(Path(args.scenes).glob("*.yaml")) \
        if Path(args.scenes).is_dir() else [Path(args.scenes)]
    if not paths:
        return _fail(f"no scenes under {args.scenes}")
    scenes = [(p.stem, load_scene(p)) for p in paths]
    modes = args.modes.split(",")
    seeds = _parse_seeds(args.seeds)
    scripts = {}
    if args.scripts:
        for scene_id, _ in scenes:
            p = Path(args.scripts) / f"{scene_id}.yaml"
            if p.exists():
                scripts[scene_id] = p.read_text(encoding="utf-8")
    try:
        records = run_benchmark(scenes, modes, seeds, _budgets(args),
                                scripts=scripts, workers=args.workers)
    except ValueError as e:
        return _fail(str(e))
    if args.out:
        write_records(records, args.out)
        print(f"wrote {len(records)} records to {args.out}")
    print(summary_table(summarize(records)))
    return 0


# -- serve ------------------------------------------------------------------

def cmd_serve(args) -> int:
    service = serve(args.bind, max_sessions=args.max_sessions)
    host, port = service.address
    print(f"listening on {host}:{port}", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pushclutter",
        description="Pushing-based rearrangement planning in clutter")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-scenes", help="write random shelf scenes")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--objects", type=int, default=10)
    p.set_defaults(func=cmd_gen_scenes)

    p = sub.add_parser("plan", help="run one guided planning session")
    p.add_argument("--scene", required=True)
    p.add_argument("--mode", required=True, choices=MODES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algorithm", choices=("rrt", "kpiece"))
    p.add_argument("--script", help="operator script for scripted mode")
    p.add_argument("--save-controls", dest="save_controls",
                   help="write the executed controls as JSON")
    _add_budget_args(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("replay", help="re-execute a recorded control file")
    p.add_argument("--controls", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("benchmark", help="batch runs over scenes and seeds")
    p.add_argument("--scenes", required=True,
                   help="scene file or directory of *.yaml scenes")
    p.add_argument("--modes", required=True, help="comma-separated modes")
    p.add_argument("--seeds", default="1",
                   help="N, lo:hi, or comma-separated seeds")
    p.add_argument("--scripts", help="directory of <scene>.yaml scripts")
    p.add_argument("--out", help="JSONL results path")
    p.add_argument("--workers", type=int, default=1)
    _add_budget_args(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("serve", help="run the guidance service")
    p.add_argument("--bind", default="127.0.0.1:7341")
    p.add_argument("--max-sessions", type=int, default=8,
                   dest="max_sessions")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("record", help="drive a session from stdin commands "
                                      "and save the successful script")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algorithm", choices=("rrt", "kpiece"))
    _add_budget_args(p)
    p.set_defaults(func=cmd_record)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
