"""Curate the benchmark scene suite under data/benchmark/.

Selection pipeline, in order:

1. Scan generator seeds and rank scenes by capture blockage: the minimum,
   over a fan of candidate capture poses at the goal, of the robot
   footprint's weighted overlap with movables (movables pinned against
   statics weigh more, they cannot absorb displacement). High minimum
   means every way of reaching the goal requires real rearrangement.
2. For each shortlisted scene, synthesize an operator script from the
   initial state: walk the straight corridor to the goal, relocate each
   blocker to a collision-free spot outside the corridor and away from
   the open shelf edge, end with the goal entry.
3. Verify the script end to end (guided loop, wall budgets) across the
   benchmark planner seeds; drop scenes whose script does not succeed on
   every seed.
4. Probe the bare planners on the survivors at the same wall budget and
   keep the scenes where single-shot planning struggles most.

Geometry scoring and script synthesis are deterministic. The verify and
probe stages measure wall time, so regenerating on a different machine
(or under load) can admit a different suite; the manifest records every
measurement that backed the published choice.

Run from the repository root:

    python3 tools/make_benchmark_scenes.py --out data/benchmark
"""

import argparse
import json
import math
import random
import sys
import time
import zlib
from pathlib import Path

from pushclutter import generate_random_scene
from pushclutter.benchmark import run_cell
from pushclutter.geometry import Pose2, circumradius, overlap
from pushclutter.grtc import Budgets, PlannerConfig
from pushclutter.scene import MOVABLE, Scene, SceneGenerationError, save_scene
# Curation leans on the strategy module's own corridor and placement
# predicates so synthesized scripts clear exactly what the strategies
# would consider blocking.
from pushclutter.strategies import (
    HighLevelAction,
    OperatorScript,
    PlacementExhausted,
    namo_next,
    save_script,
    script_to_yaml,
    shape_outside_polygon,
    _first_blocker,
    _placement_free,
    _robot_corridor,
)

VERIFY_SEEDS = (1000, 1001, 1002, 1003, 1004)
PROBE_SEEDS = (1000, 1001)


# ---------------------------------------------------------------------------
# stage 1: geometric ranking

def capture_block_score(scene: Scene) -> float:
    """Minimum weighted blockage over candidate capture poses at the goal."""
    goal = scene.body(scene.goal_id())
    gx, gy = goal.pose.x, goal.pose.y
    robot = scene.robot_spec()
    pk = scene.pocket
    pcx = 0.5 * (pk.xmin + pk.xmax)
    pcy = 0.5 * (pk.ymin + pk.ymax)
    movs = [b for b in scene.movable_specs() if b.id != scene.goal_id()]
    statics = scene.static_specs()

    def pin_weight(b):
        best = math.inf
        for s in statics:
            if overlap(b.shape, b.pose, s.shape, s.pose) is not None:
                return 3.0
            d = math.hypot(b.pose.x - s.pose.x, b.pose.y - s.pose.y) \
                - circumradius(b.shape) - circumradius(s.shape)
            best = min(best, d)
        return 2.0 if best < 0.03 else 1.0

    weights = {b.id: pin_weight(b) for b in movs}
    start = robot.pose
    base = math.atan2(start.y - gy, start.x - gx)
    best = math.inf
    for k in range(-15, 16):
        h = base + math.pi + k * (math.pi / 90.0)  # fan +-30 deg, facing in
        ch, sh = math.cos(h), math.sin(h)
        pose = Pose2(gx - (pcx * ch - pcy * sh), gy - (pcx * sh + pcy * ch), h)
        feasible = True
        for s in statics:
            c = overlap(robot.shape, pose, s.shape, s.pose)
            if c is not None and c.depth > 0.02:
                feasible = False
                break
        if not feasible:
            continue
        blocked = 0.0
        for b in movs:
            c = overlap(robot.shape, pose, b.shape, b.pose)
            if c is not None:
                blocked += c.depth * weights[b.id]
        best = min(best, blocked)
    return best if best is not math.inf else 9.9


def rank_candidates(lo: int, hi: int, n_movables: int, top: int) -> list:
    rows = []
    for seed in range(lo, hi):
        try:
            scene = generate_random_scene(seed, n_movables=n_movables)
        except SceneGenerationError:
            continue
        rows.append((capture_block_score(scene), -seed))
    rows.sort(reverse=True)
    return [(-negseed, score) for score, negseed in rows[:top]]


# ---------------------------------------------------------------------------
# stage 2: script synthesis

def synthesize_script(scene: Scene, max_pushes: int = 3,
                      tries: int = 4000) -> OperatorScript:
    """Relocate corridor blockers in encounter order, then go for the goal.

    Placements are checked against a hypothetical state that assumes each
    push lands at its centroid, with margin for the landing tolerance.
    Returns None when no placement chain works.
    """
    rng = random.Random(zlib.crc32(scene.name.encode()))
    q = scene.initial_configuration()
    goal_id = scene.goal_id()
    ws = scene.workspace
    entries = []
    for _ in range(max_pushes):
        goal_pos = q.objects[goal_id]
        corridor = _robot_corridor(q, (goal_pos.x, goal_pos.y), scene)
        blocker = _first_blocker(q, scene, corridor)
        if blocker is None:
            break
        c = q.objects[blocker.id]
        margin = circumradius(blocker.shape) + 0.5 * scene.region_diameter \
            + 0.03

        def acceptable(x, y):
            if not (ws.xmin + margin <= x <= ws.xmax - margin):
                return False
            # stay clear of the open front edge, a sloppy landing there
            # drops the object off the board
            if not (max(ws.ymin + margin, 0.14) <= y <= ws.ymax - margin):
                return False
            pose = Pose2(x, y, c.theta)
            if not _placement_free(blocker.shape, pose, scene, q, blocker.id):
                return False
            return shape_outside_polygon(blocker.shape, pose, corridor.hull,
                                         margin=0.06)

        placed = None
        for r_max in (0.22, 0.35, 0.6):  # prefer short pushes
            for _ in range(tries):
                r = r_max * math.sqrt(rng.random())
                a = rng.uniform(0.0, 2.0 * math.pi)
                x, y = c.x + r * math.cos(a), c.y + r * math.sin(a)
                if acceptable(x, y):
                    placed = (x, y)
                    break
            if placed is not None:
                break
        if placed is None:
            return None
        entries.append(HighLevelAction(blocker.id, placed))
        q = q.replace_object(blocker.id, Pose2(placed[0], placed[1], c.theta))
    entries.append(HighLevelAction(goal_id))
    return OperatorScript(tuple(entries))


# ---------------------------------------------------------------------------
# stages 3-4: wall-clock verification and probing

def run_mode(scene, scene_id, mode, seeds, budgets, script_text=None):
    rows = []
    for ps in seeds:
        rec = run_cell(scene, scene_id, mode, ps, budgets,
                       script_text=script_text)
        rows.append({"seed": ps, "success": rec.success,
                     "planning_time": round(rec.planning_time, 3),
                     "proposed": rec.proposed_actions,
                     "successful": rec.successful_actions,
                     "detail": rec.detail})
    return rows


def namo_exhaustion(scene: Scene, attempts: int = 5) -> int:
    """How many seeded backward-planning attempts run out of placements."""
    exhausted = 0
    for k in range(attempts):
        config = PlannerConfig(algorithm="kpiece", seed=1000 + k)
        try:
            namo_next(scene.initial_configuration(), scene, config,
                      random.Random(1000 + k))
        except PlacementExhausted:
            exhausted += 1
    return exhausted


# ---------------------------------------------------------------------------
# sparse companion scene

def pick_sparse_scene(lo: int, hi: int, attempts: int = 20) -> tuple:
    """First 2-object scene where backward planning completes on at least
    90% of seeded attempts. Deterministic: iteration-bounded planning."""
    for seed in range(lo, hi):
        try:
            scene = generate_random_scene(seed, n_movables=2)
        except SceneGenerationError:
            continue
        complete = 0
        for k in range(attempts):
            config = PlannerConfig(algorithm="kpiece", seed=1000 + k)
            try:
                plan = namo_next(scene.initial_configuration(), scene,
                                 config, random.Random(1000 + k))
            except PlacementExhausted:
                continue
            if plan and plan[-1].object == scene.goal_id():
                complete += 1
        if complete >= math.ceil(0.9 * attempts):
            return seed, complete, attempts
    raise SystemExit("no sparse scene qualified; widen the range")


# ---------------------------------------------------------------------------

def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--range", default="1:20000",
                    help="generator seed range lo:hi to scan")
    ap.add_argument("--top", type=int, default=40,
                    help="shortlist size after geometric ranking")
    ap.add_argument("--keep", type=int, default=10,
                    help="suite size")
    ap.add_argument("--objects", type=int, default=10)
    ap.add_argument("--overall", type=float, default=60.0)
    ap.add_argument("--pushing", type=float, default=10.0)
    ap.add_argument("--sparse-range", default="1:200")
    ap.add_argument("--out", default="data/benchmark")
    args = ap.parse_args(argv)

    lo, hi = (int(v) for v in args.range.split(":"))
    budgets = Budgets(overall=args.overall, pushing=args.pushing, mode="wall")

    t0 = time.monotonic()
    print(f"ranking seeds {lo}:{hi} ...", flush=True)
    shortlist = rank_candidates(lo, hi, args.objects, args.top)

    # Probe first (cheap per scene), verify scripts only where it pays:
    # single-shot hardness drives the ranking, a verified script gates
    # membership.
    probed = []
    for seed, score in shortlist:
        scene = generate_random_scene(seed, n_movables=args.objects)
        kpiece = run_mode(scene, f"s{seed}", "bare_kpiece", PROBE_SEEDS,
                          budgets)
        hardness = (sum(1 for r in kpiece if not r["success"]),
                    round(sum(r["planning_time"] for r in kpiece), 3))
        probed.append((hardness, score, seed, kpiece))
        print(f"s{seed}: capture_block={score:.3f} "
              f"kpiece fails={hardness[0]} time={hardness[1]:.1f}s",
              flush=True)
    probed.sort(key=lambda row: (row[0], row[1], -row[2]), reverse=True)

    chosen = []
    for hardness, score, seed, kpiece in probed:
        scene = generate_random_scene(seed, n_movables=args.objects)
        scene_id = f"s{seed}"
        script = synthesize_script(scene)
        if script is None:
            print(f"{scene_id}: synthesis failed, dropped", flush=True)
            continue
        text = script_to_yaml(script)
        scripted = run_mode(scene, scene_id, "scripted", VERIFY_SEEDS,
                            budgets, script_text=text)
        if not all(r["success"] for r in scripted):
            bad = [r["seed"] for r in scripted if not r["success"]]
            print(f"{scene_id}: script failed on seeds {bad}, dropped",
                  flush=True)
            continue
        chosen.append({
            "seed": seed, "capture_block": round(score, 4),
            "pushes": len(script.entries) - 1, "script": script,
            "scripted": scripted, "bare_kpiece": kpiece,
        })
        print(f"{scene_id}: kept ({len(chosen)}/{args.keep})", flush=True)
        if len(chosen) >= args.keep:
            break

    if len(chosen) < args.keep:
        raise SystemExit(f"only {len(chosen)} scenes survived; "
                         f"raise --top or widen --range")
    chosen.sort(key=lambda s: s["seed"])

    slo, shi = (int(v) for v in args.sparse_range.split(":"))
    sparse_seed, complete, attempts = pick_sparse_scene(slo, shi)
    print(f"sparse scene: seed {sparse_seed} "
          f"({complete}/{attempts} complete plans)", flush=True)

    out = Path(args.out)
    (out / "scenes").mkdir(parents=True, exist_ok=True)
    (out / "scripts").mkdir(parents=True, exist_ok=True)
    manifest = {
        "fixtures_version": 1,
        "scan_range": [lo, hi],
        "objects": args.objects,
        "budgets": {"overall": args.overall, "pushing": args.pushing,
                    "mode": "wall"},
        "verify_seeds": list(VERIFY_SEEDS),
        "probe_seeds": list(PROBE_SEEDS),
        "scenes": [],
    }
    for rank, s in enumerate(chosen, start=1):
        stem = f"{rank:02d}_s{s['seed']}"
        scene = generate_random_scene(s["seed"], n_movables=args.objects)
        save_scene(scene, out / "scenes" / f"{stem}.yaml")
        save_script(s["script"], out / "scripts" / f"{stem}.yaml")
        manifest["scenes"].append({
            "file": f"scenes/{stem}.yaml",
            "script": f"scripts/{stem}.yaml",
            "generator_seed": s["seed"],
            "capture_block": s["capture_block"],
            "pushes": s["pushes"],
            "scripted": s["scripted"],
            "bare_kpiece": s["bare_kpiece"],
            "namo_exhausted": f"{namo_exhaustion(scene)}/5",
        })
    sparse = generate_random_scene(sparse_seed, n_movables=2)
    save_scene(sparse, out / "sparse.yaml")
    manifest["sparse"] = {
        "file": "sparse.yaml", "generator_seed": sparse_seed,
        "complete_plans": f"{complete}/{attempts}",
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(chosen)} scenes + sparse companion to {out} "
          f"in {time.monotonic() - t0:.0f}s", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
