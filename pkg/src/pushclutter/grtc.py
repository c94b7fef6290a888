"""Guided push planning: high-level actions drive two-phase low-level plans.

A strategy proposes actions of the form "push this object toward that
point". Each action is served by planning to a pair of approaching poses
behind the object, then pushing the object into a disk region around the
point. When the strategy finally names the goal object, the remaining
budget goes to one last reach plan.
"""

import math
import time
from dataclasses import dataclass, field

from .dynamics import SystemConfiguration, rollout_controls
from .geometry import (
    Pose2, circumradius, min_enclosing_circle, overlap, point_to_shape_distance,
)
from .planners import (
    RRT, SOLVED, PlannerParams, PlannerRequest, plan,
)
from .scene import ObjectInRegion, ReachGoalObject, RobotPoseSet, Scene

WALL = "wall"
ITERATIONS = "iterations"

SUCCESS = "success"
OVERALL_TIMEOUT = "overall_timeout"
STRATEGY_EXHAUSTED = "strategy_exhausted"

# signal value a strategy returns when it has nothing left to propose
EXHAUSTED = None

APPROACH_CLEARANCE = 0.02
# tolerance for "reached an approaching pose"; exactness is pointless
# since the push replans from wherever the robot actually stopped
APPROACH_TOL_XY = 0.03
APPROACH_TOL_THETA = 0.35


class DegenerateDirectionError(ValueError):
    """Push target coincides with the object center."""


@dataclass(frozen=True)
class HighLevelAction:
    """Push `object` toward `centroid`; the goal object needs no centroid."""

    object: str
    centroid: tuple = None

    def __post_init__(self):
        if self.centroid is not None:
            x, y = self.centroid
            object.__setattr__(self, "centroid", (float(x), float(y)))


@dataclass(frozen=True)
class Budgets:
    """Overall and per-push limits, in seconds or planner iterations."""

    overall: float = 300.0
    pushing: float = 10.0
    mode: str = WALL

    def __post_init__(self):
        if self.mode not in (WALL, ITERATIONS):
            raise ValueError(f"unknown budget mode {self.mode!r}")
        if not 0.0 < self.pushing <= self.overall:
            raise ValueError("need 0 < pushing <= overall")


@dataclass(frozen=True)
class PlannerConfig:
    algorithm: str = RRT
    params: PlannerParams = field(default_factory=PlannerParams)
    seed: int = 0


@dataclass(frozen=True)
class ExecutedAction:
    action: HighLevelAction
    success: bool
    plan_time: float


@dataclass(frozen=True)
class ActionResult:
    success: bool
    state: SystemConfiguration
    controls: tuple
    plan_time: float
    cost: float  # budget units actually consumed (seconds or iterations)
    phase1_status: str
    phase2_status: str


@dataclass(frozen=True)
class GrtcOutcome:
    status: str
    executed_actions: tuple
    guidance_time: float
    planning_time: float
    final_state: SystemConfiguration
    full_controls: tuple

    @property
    def succeeded(self) -> bool:
        return self.status == SUCCESS


def compute_approaching_states(q: SystemConfiguration, object_id: str,
                               centroid, scene: Scene):
    """Two staging poses behind the object relative to the push target.

    q_a2 sits on the far side of the object from the centroid, facing the
    push direction (forward pushing). q_a1 sits on the perpendicular side
    with more static clearance, facing the object (side-ways pushing).
    Returns (q_a1, q_a2).
    """
    spec = scene.body(object_id)
    c = q.objects[object_id]
    tx, ty = float(centroid[0]), float(centroid[1])
    dx = tx - c.x
    dy = ty - c.y
    n = math.sqrt(dx * dx + dy * dy)
    if n < 1e-6:
        raise DegenerateDirectionError(
            f"push target coincides with center of {object_id!r}")
    ux, uy = dx / n, dy / n
    _, m = min_enclosing_circle(spec.shape, c)
    d = m + circumradius(scene.robot_spec().shape) + APPROACH_CLEARANCE
    q_a2 = Pose2(c.x - d * ux, c.y - d * uy, math.atan2(uy, ux))

    # candidate side positions: left of the push direction and right of it
    lx, ly = -uy, ux
    left = (c.x + d * lx, c.y + d * ly)
    right = (c.x - d * lx, c.y - d * ly)
    if _static_clearance(left, scene) >= _static_clearance(right, scene):
        px, py = left
    else:
        px, py = right
    q_a1 = Pose2(px, py, math.atan2(c.y - py, c.x - px))
    return q_a1, q_a2


def _static_clearance(p, scene):
    best = math.inf
    for s in scene.static_specs():
        dist = point_to_shape_distance(s.shape, s.pose, p[0], p[1])
        if dist < best:
            best = dist
    return best


def _statically_reachable(pose, scene):
    """False when the robot footprint at this pose penetrates a static
    more deeply than the approach tolerance can absorb."""
    shape = scene.robot_spec().shape
    for s in scene.static_specs():
        c = overlap(shape, pose, s.shape, s.pose)
        if c is not None and c.depth > APPROACH_TOL_XY:
            return False
    return True


def _run_planner(start, goal, scene, budgets, budget_value, config, seed,
                 active_ids=None, robot_ghost=False):
    """One planner call plus its cost in budget units."""
    if budgets.mode == ITERATIONS:
        req = PlannerRequest(start=start, goal=goal,
                             algorithm=config.algorithm, rng_seed=seed,
                             iteration_budget=max(1, int(budget_value)),
                             params=config.params, active_ids=active_ids,
                             robot_ghost=robot_ghost)
        res = plan(req, scene)
        return res, float(res.stats.iterations)
    req = PlannerRequest(start=start, goal=goal, algorithm=config.algorithm,
                         rng_seed=seed, time_budget=budget_value,
                         params=config.params, active_ids=active_ids,
                         robot_ghost=robot_ghost)
    res = plan(req, scene)
    return res, res.stats.wall_time


def execute_high_level_action(q: SystemConfiguration, action: HighLevelAction,
                              scene: Scene, budgets: Budgets,
                              config: PlannerConfig,
                              seed_offset: int = 1) -> ActionResult:
    """Serve one non-goal action: reach an approaching pose, then push.

    On any failure nothing is executed and the returned state is q.
    """
    if action.object == scene.goal_id():
        raise ValueError("goal-object actions are served by the final reach")
    if action.centroid is None:
        raise ValueError("non-goal actions require a centroid")
    q_a1, q_a2 = compute_approaching_states(q, action.object, action.centroid,
                                            scene)
    # drop staging poses buried in statics; tolerances cannot absorb those
    members = tuple(p for p in (q_a1, q_a2) if _statically_reachable(p, scene))
    if not members:
        return ActionResult(False, q, (), 0.0, 0.0, "unreachable",
                            "not_attempted")

    seed1 = config.seed + 1000003 * seed_offset
    goal1 = RobotPoseSet(poses=members, tol_xy=APPROACH_TOL_XY,
                         tol_theta=APPROACH_TOL_THETA)
    res1, cost1 = _run_planner(q, goal1, scene, budgets, budgets.pushing,
                               config, seed1)
    if res1.status != SOLVED:
        return ActionResult(False, q, (), res1.stats.wall_time, cost1,
                            res1.status, "not_attempted")

    seed2 = config.seed + 1000003 * (seed_offset + 1)
    goal2 = ObjectInRegion(action.object, action.centroid,
                           scene.region_diameter)
    res2, cost2 = _run_planner(res1.final_state, goal2, scene, budgets,
                               budgets.pushing, config, seed2)
    plan_time = res1.stats.wall_time + res2.stats.wall_time
    if res2.status != SOLVED:
        return ActionResult(False, q, (), plan_time, cost1 + cost2,
                            res1.status, res2.status)

    controls = res1.controls + res2.controls
    traj, report = rollout_controls(q, controls, scene)
    if not report.valid:
        # replay safety net; propagation is deterministic so this does
        # not happen, but a failed action must never corrupt the state
        return ActionResult(False, q, (), plan_time, cost1 + cost2,
                            res1.status, "replay_invalid")
    return ActionResult(True, traj[-1], controls, plan_time, cost1 + cost2,
                        res1.status, res2.status)


def run_grtc(scene: Scene, strategy, budgets: Budgets = Budgets(),
             config: PlannerConfig = PlannerConfig(), log=None) -> GrtcOutcome:
    """Drive the guided planning loop until the goal object is reached,
    the budget runs out, or the strategy gives up.

    `strategy` exposes next_high_level_action(q) -> HighLevelAction or
    EXHAUSTED. `log`, when given, receives one dict per loop iteration.
    """
    q = scene.initial_configuration()
    executed = []
    full_controls = []
    guidance_time = 0.0
    planning_time = 0.0
    spent = 0.0  # budget units
    grain = 1.0 if budgets.mode == ITERATIONS else scene.physics.dt
    goal_id = scene.goal_id()
    action_no = 0
    status = None
    while True:
        if budgets.overall - spent < grain:
            status = OVERALL_TIMEOUT
            break
        t0 = time.monotonic()
        action = strategy.next_high_level_action(q)
        dt_guidance = time.monotonic() - t0
        if budgets.mode == WALL:
            guidance_time += dt_guidance
            spent += dt_guidance
        if action is EXHAUSTED:
            status = STRATEGY_EXHAUSTED
            break
        scene.body(action.object)  # unknown ids fail loudly
        if action.object == goal_id:
            if action.centroid is not None:
                raise ValueError("goal-object action must omit the centroid")
            seed = config.seed if action_no == 0 else \
                config.seed + 1000003 * (2 * action_no + 1)
            res, cost = _run_planner(q, ReachGoalObject(), scene, budgets,
                                     budgets.overall - spent, config, seed)
            spent += cost
            planning_time += res.stats.wall_time
            ok = res.status == SOLVED
            executed.append(ExecutedAction(action, ok, res.stats.wall_time))
            if log is not None:
                log({"action": action.object, "centroid": None,
                     "phase1": res.status, "phase2": None, "success": ok,
                     "plan_time": res.stats.wall_time, "spent": spent})
            if ok:
                q = res.final_state
                full_controls.extend(res.controls)
                status = SUCCESS
            else:
                status = OVERALL_TIMEOUT
            break
        result = execute_high_level_action(q, action, scene, budgets, config,
                                           seed_offset=2 * action_no + 1)
        spent += result.cost
        planning_time += result.plan_time
        executed.append(ExecutedAction(action, result.success,
                                       result.plan_time))
        if log is not None:
            log({"action": action.object, "centroid": list(action.centroid),
                 "phase1": result.phase1_status, "phase2": result.phase2_status,
                 "success": result.success, "plan_time": result.plan_time,
                 "spent": spent})
        if result.success:
            q = result.state
            full_controls.extend(result.controls)
        action_no += 1
    return GrtcOutcome(status=status, executed_actions=tuple(executed),
                       guidance_time=guidance_time,
                       planning_time=planning_time, final_state=q,
                       full_controls=tuple(full_controls))
