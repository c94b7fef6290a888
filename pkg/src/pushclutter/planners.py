"""Kinodynamic planners over the pushing dynamics.

Both planners grow a tree of propagated states. RRT pulls the tree toward
pose samples; KPIECE pushes it out of well-covered grid cells. Budgets are
either wall-clock seconds (experiments) or exact iteration counts
(reproducible runs); with an iteration budget the result is a pure function
of the request.
"""

import math
import random
import time
from dataclasses import dataclass, field

from .dynamics import (
    Control, SystemConfiguration, check_validity, propagate, rollout_controls,
)
from .geometry import Pose2, circumradius, min_enclosing_circle, se2_distance
from .scene import (
    GoalSpec, ObjectInRegion, ReachGoalObject, RobotPoseSet, Scene,
    goal_satisfied,
)

RRT = "rrt"
KPIECE = "kpiece"
ALGORITHMS = (RRT, KPIECE)

SOLVED = "solved"
TIMED_OUT = "timed_out"
INFEASIBLE = "infeasible"

# clearance added beyond the enclosing circles when sampling push poses
APPROACH_CLEARANCE = 0.02


@dataclass(frozen=True)
class PlannerParams:
    goal_bias: float = 0.05
    max_controls_per_extend: int = 5
    w_rot: float = 0.25
    kpiece_cell_size: float = 0.05
    kpiece_interior_threshold: int = 4

    def __post_init__(self):
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValueError(f"goal_bias must be in [0,1], got {self.goal_bias}")
        if self.max_controls_per_extend < 1:
            raise ValueError("max_controls_per_extend must be at least 1")
        if not self.kpiece_cell_size > 0.0:
            raise ValueError("kpiece_cell_size must be positive")
        if not 1 <= self.kpiece_interior_threshold <= 4:
            raise ValueError("kpiece_interior_threshold must be in 1..4")
        if self.w_rot < 0.0:
            raise ValueError("w_rot must be non-negative")


@dataclass(frozen=True)
class PlannerRequest:
    """One planning problem. Exactly one of time_budget / iteration_budget."""

    start: SystemConfiguration
    goal: GoalSpec
    algorithm: str = RRT
    rng_seed: int = 0
    time_budget: float = None
    iteration_budget: int = None
    params: PlannerParams = field(default_factory=PlannerParams)
    # robot passes through movables (statics still solid)
    robot_ghost: bool = False
    # if set, only these movables respond to the robot; the rest are frozen
    active_ids: frozenset = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if (self.time_budget is None) == (self.iteration_budget is None):
            raise ValueError(
                "set exactly one of time_budget and iteration_budget")
        if self.time_budget is not None and not self.time_budget > 0.0:
            raise ValueError("time_budget must be positive")
        if self.iteration_budget is not None and self.iteration_budget < 1:
            raise ValueError("iteration_budget must be at least 1")
        if self.active_ids is not None:
            object.__setattr__(self, "active_ids", frozenset(self.active_ids))


@dataclass(frozen=True)
class PlanStats:
    iterations: int
    tree_size: int
    wall_time: float


@dataclass(frozen=True)
class PlanResult:
    status: str
    controls: tuple
    final_state: SystemConfiguration
    stats: PlanStats

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


class PlannerTrace:
    """Optional collector exposing internal growth for inspection.

    nodes holds (parent_index, control, state) in insertion order, the
    root first with (None, None, start). coverage is KPIECE-only:
    (occupied, interior, exterior) after every iteration.
    """

    def __init__(self):
        self.nodes = []
        self.goal_samples = []
        self.coverage = []


class _Node:
    __slots__ = ("state", "parent", "control")

    def __init__(self, state, parent, control):
        self.state = state
        self.parent = parent
        self.control = control


def _clamp(v, lo, hi):
    return lo if v < lo else hi if v > hi else v


def _sample_goal_pose(goal, anchor, scene, rng, robot_pos):
    """A robot pose that would satisfy (or set up) the goal, anchored at
    the object positions of an existing tree state. Always inside the
    workspace."""
    ws = scene.workspace
    if isinstance(goal, RobotPoseSet):
        p = goal.poses[rng.randrange(len(goal.poses))]
        return Pose2(_clamp(p.x, ws.xmin, ws.xmax),
                     _clamp(p.y, ws.ymin, ws.ymax), p.theta)
    if isinstance(goal, ReachGoalObject):
        spec = scene.goal_spec()
        c = anchor.objects[spec.id]
        base = math.atan2(c.y - robot_pos.y, c.x - robot_pos.x)
        h = base + rng.uniform(-math.pi / 6, math.pi / 6)
        pk = scene.pocket
        pcx = 0.5 * (pk.xmin + pk.xmax)
        pcy = 0.5 * (pk.ymin + pk.ymax)
        ch, sh = math.cos(h), math.sin(h)
        x = c.x - (pcx * ch - pcy * sh)
        y = c.y - (pcx * sh + pcy * ch)
        return Pose2(_clamp(x, ws.xmin, ws.xmax), _clamp(y, ws.ymin, ws.ymax), h)
    if isinstance(goal, ObjectInRegion):
        spec = scene.body(goal.object_id)
        c = anchor.objects[goal.object_id]
        dx = goal.centroid[0] - c.x
        dy = goal.centroid[1] - c.y
        n = math.sqrt(dx * dx + dy * dy)
        if n < 1e-9:
            ux, uy, h = 1.0, 0.0, 0.0
        else:
            ux, uy = dx / n, dy / n
            h = math.atan2(uy, ux)
        _, m = min_enclosing_circle(spec.shape, c)
        rr = circumradius(scene.robot_spec().shape)
        d = m + rr + APPROACH_CLEARANCE + rng.uniform(0.0, 0.2)
        return Pose2(_clamp(c.x - d * ux, ws.xmin, ws.xmax),
                     _clamp(c.y - d * uy, ws.ymin, ws.ymax), h)
    raise TypeError(f"not a goal spec: {goal!r}")


def _sample_control(rng, ph):
    return Control(rng.uniform(-ph.v_max, ph.v_max),
                   rng.uniform(-ph.v_max, ph.v_max),
                   rng.uniform(-ph.omega_max, ph.omega_max),
                   rng.uniform(ph.dt, ph.d_max))


class _Budget:
    """Iteration- or wall-clock-bounded loop guard; checked between
    iterations only."""

    def __init__(self, req):
        self.iterations = 0
        self._cap = req.iteration_budget
        self._t0 = time.monotonic()
        self._deadline = (None if req.time_budget is None
                          else self._t0 + req.time_budget)

    def exhausted(self):
        if self._cap is not None:
            return self.iterations >= self._cap
        return time.monotonic() >= self._deadline

    def wall_time(self):
        # zero in iteration mode so deterministic results compare whole
        return 0.0 if self._cap is not None else time.monotonic() - self._t0


def _finish(status, nodes, goal_index, budget, start):
    if goal_index is None:
        return PlanResult(status, (), start,
                          PlanStats(budget.iterations, len(nodes),
                                    budget.wall_time()))
    controls = []
    i = goal_index
    while nodes[i].parent is not None:
        controls.append(nodes[i].control)
        i = nodes[i].parent
    controls.reverse()
    return PlanResult(status, tuple(controls), nodes[goal_index].state,
                      PlanStats(budget.iterations, len(nodes),
                                budget.wall_time()))


def plan_rrt(req: PlannerRequest, scene: Scene, trace: PlannerTrace = None) \
        -> PlanResult:
    """Kinodynamic RRT: pose samples pull the tree; each extension tries
    several random controls and keeps the child nearest the sample."""
    rng = random.Random(req.rng_seed)
    budget = _Budget(req)
    if not check_validity(req.start, scene).valid:
        return PlanResult(INFEASIBLE, (), req.start, PlanStats(0, 0, 0.0))
    nodes = [_Node(req.start, None, None)]
    if trace is not None:
        trace.nodes.append((None, None, req.start))
    if goal_satisfied(req.start, req.goal, scene):
        return _finish(SOLVED, nodes, 0, budget, req.start)
    p = req.params
    ph = scene.physics
    while not budget.exhausted():
        budget.iterations += 1
        if rng.random() < p.goal_bias:
            anchor = nodes[rng.randrange(len(nodes))]
            sample = _sample_goal_pose(req.goal, anchor.state, scene, rng,
                                       anchor.state.robot)
            if trace is not None:
                trace.goal_samples.append(sample)
        else:
            ws = scene.workspace
            sample = Pose2(rng.uniform(ws.xmin, ws.xmax),
                           rng.uniform(ws.ymin, ws.ymax),
                           rng.uniform(-math.pi, math.pi))
        near_i = 0
        near_d = se2_distance(nodes[0].state.robot, sample, p.w_rot)
        for i in range(1, len(nodes)):
            d = se2_distance(nodes[i].state.robot, sample, p.w_rot)
            if d < near_d:
                near_i, near_d = i, d
        near = nodes[near_i]
        best = None
        best_d = math.inf
        best_u = None
        for _ in range(p.max_controls_per_extend):
            u = _sample_control(rng, ph)
            child, report = propagate(near.state, u, scene,
                                      robot_ghost=req.robot_ghost,
                                      active_ids=req.active_ids)
            if not report.valid:
                continue
            d = se2_distance(child.robot, sample, p.w_rot)
            if d < best_d:
                best, best_d, best_u = child, d, u
        if best is None:
            continue
        nodes.append(_Node(best, near_i, best_u))
        if trace is not None:
            trace.nodes.append((near_i, best_u, best))
        if goal_satisfied(best, req.goal, scene):
            return _finish(SOLVED, nodes, len(nodes) - 1, budget, req.start)
    return _finish(TIMED_OUT, nodes, None, budget, req.start)


def plan_kpiece(req: PlannerRequest, scene: Scene, trace: PlannerTrace = None) \
        -> PlanResult:
    """KPIECE: project states to a robot-(x,y) grid and preferentially
    expand rarely-visited exterior cells."""
    rng = random.Random(req.rng_seed)
    budget = _Budget(req)
    if not check_validity(req.start, scene).valid:
        return PlanResult(INFEASIBLE, (), req.start, PlanStats(0, 0, 0.0))
    nodes = [_Node(req.start, None, None)]
    if trace is not None:
        trace.nodes.append((None, None, req.start))
    if goal_satisfied(req.start, req.goal, scene):
        return _finish(SOLVED, nodes, 0, budget, req.start)
    p = req.params
    ph = scene.physics
    cell = p.kpiece_cell_size

    # grid bookkeeping: per cell a node list, a visit count, and an
    # interior flag (all four neighbors occupied); dict order is insertion
    # order, which keeps weighted selection deterministic
    grid = {}

    def key_of(state):
        return (math.floor(state.robot.x / cell),
                math.floor(state.robot.y / cell))

    def reclassify(k):
        if k in grid:
            (x, y) = k
            n = ((x + 1, y) in grid) + ((x - 1, y) in grid) + \
                ((x, y + 1) in grid) + ((x, y - 1) in grid)
            grid[k][2] = n >= p.kpiece_interior_threshold

    def occupy(state, node_index):
        k = key_of(state)
        entry = grid.get(k)
        if entry is None:
            grid[k] = [[node_index], 0, False]
            x, y = k
            for kk in (k, (x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                reclassify(kk)
        else:
            entry[0].append(node_index)

    def pick_cell():
        # prefer exterior cells 9 times out of 10; fall back to whatever
        # exists when the preferred class is empty
        prefer_interior = rng.random() >= 0.9
        pool = [e for e in grid.values() if e[2] == prefer_interior]
        if not pool:
            pool = list(grid.values())
        total = 0.0
        weights = []
        for e in pool:
            w = 1.0 / (1.0 + e[1] * e[1])
            weights.append(w)
            total += w
        r = rng.random() * total
        acc = 0.0
        for e, w in zip(pool, weights):
            acc += w
            if r <= acc:
                return e
        return pool[-1]

    occupy(req.start, 0)
    while not budget.exhausted():
        budget.iterations += 1
        entry = pick_cell()
        entry[1] += 1
        src_i = entry[0][rng.randrange(len(entry[0]))]
        u = _sample_control(rng, ph)
        child, report = propagate(nodes[src_i].state, u, scene,
                                  robot_ghost=req.robot_ghost,
                                  active_ids=req.active_ids)
        if report.valid:
            nodes.append(_Node(child, src_i, u))
            occupy(child, len(nodes) - 1)
            if trace is not None:
                trace.nodes.append((src_i, u, child))
            if goal_satisfied(child, req.goal, scene):
                if trace is not None:
                    trace.coverage.append(_coverage(grid))
                return _finish(SOLVED, nodes, len(nodes) - 1, budget,
                               req.start)
        if trace is not None:
            trace.coverage.append(_coverage(grid))
    return _finish(TIMED_OUT, nodes, None, budget, req.start)


def _coverage(grid):
    interior = sum(1 for e in grid.values() if e[2])
    return (len(grid), interior, len(grid) - interior)


def plan(req: PlannerRequest, scene: Scene, trace: PlannerTrace = None) \
        -> PlanResult:
    if req.algorithm == RRT:
        return plan_rrt(req, scene, trace)
    return plan_kpiece(req, scene, trace)


def validate_solution(start: SystemConfiguration, controls, goal: GoalSpec,
                      scene: Scene, robot_ghost: bool = False,
                      active_ids=None) -> bool:
    """Independent replay check: the rollout must stay valid throughout
    and satisfy the goal at its end."""
    traj, report = rollout_controls(start, list(controls), scene,
                                    robot_ghost=robot_ghost,
                                    active_ids=active_ids)
    if not report.valid:
        return False
    return goal_satisfied(traj[-1], goal, scene)
