"""Sources of high-level push actions.

Four producers share one interface, next_high_level_action(q) -> action or
EXHAUSTED: a scripted operator for reproducible runs, a straight-line
blocking heuristic, a backward NAMO planner, and a bridge that forwards a
live operator's selections.
"""

import math
import queue
import time
from dataclasses import dataclass

import yaml

from .dynamics import rollout_controls
from .geometry import (
    Pose2, overlap, shape_outside_polygon, swept_corridor,
)
from .grtc import (
    EXHAUSTED, HighLevelAction, PlannerConfig, compute_approaching_states,
)
from .planners import SOLVED, PlannerRequest, plan
from .scene import ObjectInRegion, ReachGoalObject, RobotPoseSet, Scene

CORRIDOR_STEP = 0.05
# placement sampling radius around a blocking obstacle
LOCAL_PLACEMENT_RADIUS = 0.30
LOCAL_PLACEMENT_TRIES = 200
GLOBAL_PLACEMENT_TRIES = 2000
NAMO_PLACEMENT_TRIES = 500


class PlacementExhausted(Exception):
    """No collision-free placement satisfied the constraints."""


@dataclass(frozen=True)
class OperatorScript:
    """Pre-recorded action sequence; the last entry must name the goal."""

    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValueError("script must contain at least one action")
        if self.entries[-1].centroid is not None:
            raise ValueError("script must end with the goal-object action")


class ScriptParseError(ValueError):
    """Operator script document malformed."""


def script_to_yaml(script: OperatorScript) -> str:
    lines = ["version: 1", "entries:"]
    for e in script.entries:
        if e.centroid is None:
            lines.append(f"- {{object: {e.object}}}")
        else:
            lines.append(f"- {{object: {e.object}, "
                         f"centroid: [{e.centroid[0]:.9g}, "
                         f"{e.centroid[1]:.9g}]}}")
    return "\n".join(lines) + "\n"


def script_from_yaml(text: str) -> OperatorScript:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ScriptParseError(f"not valid YAML: {e}") from e
    if not isinstance(doc, dict):
        raise ScriptParseError("expected a mapping at the top level")
    if doc.get("version") != 1:
        raise ScriptParseError(f"unsupported version {doc.get('version')!r}")
    raw = doc.get("entries")
    if not isinstance(raw, list):
        raise ScriptParseError("entries: expected a list")
    entries = []
    for i, e in enumerate(raw):
        path = f"entries[{i}]"
        if not isinstance(e, dict) or "object" not in e:
            raise ScriptParseError(f"{path}: expected a mapping with 'object'")
        centroid = e.get("centroid")
        if centroid is not None:
            if not (isinstance(centroid, list) and len(centroid) == 2
                    and all(isinstance(v, (int, float)) for v in centroid)):
                raise ScriptParseError(f"{path}.centroid: expected [x, y]")
            centroid = (float(centroid[0]), float(centroid[1]))
        entries.append(HighLevelAction(str(e["object"]), centroid))
    try:
        return OperatorScript(tuple(entries))
    except ValueError as e:
        raise ScriptParseError(str(e)) from e


def load_script(path) -> OperatorScript:
    with open(path, "r", encoding="utf-8") as fh:
        return script_from_yaml(fh.read())


def save_script(script: OperatorScript, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(script_to_yaml(script))


class ScriptedStrategy:
    """Replays a script; repeats the final goal action once exhausted."""

    def __init__(self, script: OperatorScript):
        self.script = script
        self._cursor = 0

    def next_high_level_action(self, q):
        if self._cursor < len(self.script.entries):
            action = self.script.entries[self._cursor]
            self._cursor += 1
            return action
        return self.script.entries[-1]


class ImmediateGoal:
    """Degenerates guided planning to a single bare planner call."""

    def __init__(self, goal_id: str):
        self._action = HighLevelAction(goal_id)

    def next_high_level_action(self, q):
        return self._action


# ---------------------------------------------------------------------------
# straight-line heuristic

def _robot_corridor(q, target_xy, scene):
    start = q.robot
    end = Pose2(target_xy[0], target_xy[1], start.theta)
    return swept_corridor(scene.robot_spec().shape, start, end, CORRIDOR_STEP)


def _first_blocker(q, scene, corridor):
    """Movable (never the goal object) in the corridor, nearest along it."""
    start = q.robot
    gx = corridor.footprint_samples[-1][1].x - start.x
    gy = corridor.footprint_samples[-1][1].y - start.y
    norm = math.sqrt(gx * gx + gy * gy)
    ux, uy = (1.0, 0.0) if norm == 0.0 else (gx / norm, gy / norm)
    best = None
    for spec in scene.movable_specs():
        if spec.id == scene.goal_id():
            continue
        p = q.objects[spec.id]
        if shape_outside_polygon(spec.shape, p, corridor.hull):
            continue
        along = (p.x - start.x) * ux + (p.y - start.y) * uy
        if best is None or (along, spec.id) < best[:2]:
            best = (along, spec.id, spec)
    return None if best is None else best[2]


def _placement_free(shape, pose, scene, q, skip_id):
    """Collision-free against statics and every other movable, inside the
    workspace."""
    if not scene.workspace.contains(pose.x, pose.y):
        return False
    for s in scene.static_specs():
        if overlap(shape, pose, s.shape, s.pose) is not None:
            return False
    for spec in scene.movable_specs():
        if spec.id == skip_id:
            continue
        if overlap(shape, pose, spec.shape, q.objects[spec.id]) is not None:
            return False
    return True


def heuristic_next(q, scene: Scene, rng) -> HighLevelAction:
    """Alg.: clear the first movable blocking the straight line to
    the goal object; with a clear line, go for the goal itself."""
    goal_pos = q.objects[scene.goal_id()]
    corridor = _robot_corridor(q, (goal_pos.x, goal_pos.y), scene)
    blocker = _first_blocker(q, scene, corridor)
    if blocker is None:
        return HighLevelAction(scene.goal_id())
    c = q.objects[blocker.id]

    def acceptable(x, y):
        pose = Pose2(x, y, c.theta)
        return (_placement_free(blocker.shape, pose, scene, q, blocker.id)
                and shape_outside_polygon(blocker.shape, pose, corridor.hull))

    for _ in range(LOCAL_PLACEMENT_TRIES):
        r = LOCAL_PLACEMENT_RADIUS * math.sqrt(rng.random())
        a = rng.uniform(0.0, 2.0 * math.pi)
        x, y = c.x + r * math.cos(a), c.y + r * math.sin(a)
        if acceptable(x, y):
            return HighLevelAction(blocker.id, (x, y))
    ws = scene.workspace
    for _ in range(GLOBAL_PLACEMENT_TRIES):
        x = rng.uniform(ws.xmin, ws.xmax)
        y = rng.uniform(ws.ymin, ws.ymax)
        if acceptable(x, y):
            return HighLevelAction(blocker.id, (x, y))
    return EXHAUSTED


class HeuristicStrategy:
    """Stateful wrapper: one rng stream across calls, so a failed action
    gets a fresh placement next time."""

    def __init__(self, scene: Scene, rng):
        self.scene = scene
        self.rng = rng

    def next_high_level_action(self, q):
        return heuristic_next(q, self.scene, self.rng)


# ---------------------------------------------------------------------------
# backward NAMO planner

def _sweep_hulls(states, scene):
    """Swept-corridor hulls of the robot between consecutive states."""
    shape = scene.robot_spec().shape
    hulls = []
    for a, b in zip(states, states[1:]):
        hulls.append(swept_corridor(shape, a.robot, b.robot,
                                    CORRIDOR_STEP).hull)
    return hulls


def _outside_all(shape, pose, hulls, margin=1e-6):
    return all(shape_outside_polygon(shape, pose, h, margin) for h in hulls)


def namo_next(q, scene: Scene, config: PlannerConfig, rng,
              sub_budget: int = 3000) -> list:
    """Plan backwards from the goal reach, relocating every movable the
    relaxed plans sweep through. Returns actions in execution order
    (last-planned first), ending with the goal action. Raises
    PlacementExhausted when clutter leaves no room."""
    hulls = []
    processed = set()
    discovery = []  # (object id, placement) in planning order
    pending = []

    def relaxed_plan(start, goal, seed, active=None):
        req = PlannerRequest(start=start, goal=goal, algorithm=config.algorithm,
                             rng_seed=seed, iteration_budget=sub_budget,
                             params=config.params, robot_ghost=active is None,
                             active_ids=active)
        return plan(req, scene)

    def enqueue_intersecting(trajectory):
        new_hulls = _sweep_hulls(trajectory, scene)
        hulls.extend(new_hulls)
        for spec in scene.movable_specs():
            if spec.id == scene.goal_id() or spec.id in processed:
                continue
            if spec.id in pending:
                continue
            p = q.objects[spec.id]
            if not _outside_all(spec.shape, p, new_hulls):
                pending.append(spec.id)

    res = relaxed_plan(q, ReachGoalObject(), config.seed)
    if res.status != SOLVED:
        raise PlacementExhausted("relaxed goal reach not found")
    traj, _ = rollout_controls(q, res.controls, scene, robot_ghost=True)
    enqueue_intersecting(traj)

    guard = len(scene.movable_specs())
    k = 0
    while pending:
        if len(processed) > guard:
            raise PlacementExhausted("relocation chain exceeds object count")
        oid = pending.pop(0)
        processed.add(oid)
        spec = scene.body(oid)
        c = q.objects[oid]
        # placements stay local to the object and clear the accumulated
        # corridors by half a region diameter, so the later push cannot
        # land the body back inside them
        clear = 0.5 * scene.region_diameter
        placement = None
        for _ in range(NAMO_PLACEMENT_TRIES):
            r = LOCAL_PLACEMENT_RADIUS * math.sqrt(rng.random())
            a = rng.uniform(0.0, 2.0 * math.pi)
            x, y = c.x + r * math.cos(a), c.y + r * math.sin(a)
            pose = Pose2(x, y, c.theta)
            if _placement_free(spec.shape, pose, scene, q, oid) and \
                    _outside_all(spec.shape, pose, hulls, clear):
                placement = (x, y)
                break
        if placement is None:
            raise PlacementExhausted(f"no placement left for {oid!r}")
        # relaxed reach-and-push for this object, sweeping more space
        k += 1
        q_a1, q_a2 = compute_approaching_states(q, oid, placement, scene)
        goal1 = RobotPoseSet(poses=(q_a1, q_a2), tol_xy=0.03, tol_theta=0.35)
        r1 = relaxed_plan(q, goal1, config.seed + 1000003 * (2 * k - 1))
        if r1.status == SOLVED:
            t1, _ = rollout_controls(q, r1.controls, scene, robot_ghost=True)
            enqueue_intersecting(t1)
            goal2 = ObjectInRegion(oid, placement, scene.region_diameter)
            r2 = relaxed_plan(t1[-1], goal2,
                              config.seed + 1000003 * (2 * k),
                              active=frozenset({oid}))
            if r2.status == SOLVED:
                t2, _ = rollout_controls(t1[-1], r2.controls, scene,
                                         active_ids=frozenset({oid}))
                enqueue_intersecting(t2)
        discovery.append((oid, placement))

    actions = [HighLevelAction(oid, placement)
               for oid, placement in reversed(discovery)]
    actions.append(HighLevelAction(scene.goal_id()))
    return actions


class NamoStrategy:
    """Computes the full relocation plan on first use, then replays it."""

    def __init__(self, scene: Scene, config: PlannerConfig, rng,
                 sub_budget: int = 3000):
        self.scene = scene
        self.config = config
        self.rng = rng
        self.sub_budget = sub_budget
        self._plan = None
        self._cursor = 0

    def next_high_level_action(self, q):
        if self._plan is None:
            try:
                self._plan = namo_next(q, self.scene, self.config, self.rng,
                                       self.sub_budget)
            except PlacementExhausted:
                self._plan = []
        if not self._plan:
            return EXHAUSTED
        if self._cursor < len(self._plan):
            action = self._plan[self._cursor]
            self._cursor += 1
            return action
        return self._plan[-1]


# ---------------------------------------------------------------------------
# live operator bridge

class HumanBridgeStrategy:
    """Forwards operator selections arriving over a message queue.

    The service feeds parsed messages via select()/point()/close(); the
    planning loop blocks in next_high_level_action until a full action is
    assembled or the deadline passes.
    """

    def __init__(self, goal_id: str, deadline: float = None,
                 on_error=None):
        self._goal_id = goal_id
        self._deadline = deadline
        self._on_error = on_error
        self._inbox = queue.Queue()

    def select(self, object_id: str):
        self._inbox.put(("select", object_id))

    def point(self, x: float, y: float):
        self._inbox.put(("point", float(x), float(y)))

    def close(self):
        self._inbox.put(("close",))

    def _error(self, message):
        if self._on_error is not None:
            self._on_error(message)

    def _take(self):
        if self._deadline is None:
            return self._inbox.get()
        remaining = self._deadline - time.monotonic()
        if remaining <= 0.0:
            return None
        try:
            return self._inbox.get(timeout=remaining)
        except queue.Empty:
            return None

    def next_high_level_action(self, q):
        selected = None
        while True:
            msg = self._take()
            if msg is None or msg[0] == "close":
                return EXHAUSTED
            if msg[0] == "select":
                # re-selecting before pointing replaces the pending choice
                if msg[1] == self._goal_id:
                    return HighLevelAction(self._goal_id)
                selected = msg[1]
            elif msg[0] == "point":
                if selected is None:
                    self._error("point arrived with no object selected")
                    continue
                return HighLevelAction(selected, (msg[1], msg[2]))
            else:
                self._error(f"unknown message {msg[0]!r}")
