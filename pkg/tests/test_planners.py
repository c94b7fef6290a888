"""Planner tests: solve/timeout behavior, determinism, tree soundness,
KPIECE coverage bookkeeping, and replay validation."""

import math
import random

import pytest

from pushclutter.dynamics import propagate
from pushclutter.geometry import Box, Disk, Pose2, se2_distance
from pushclutter.planners import (
    INFEASIBLE, KPIECE, RRT, SOLVED, TIMED_OUT,
    PlannerParams, PlannerRequest, PlannerTrace,
    plan, plan_kpiece, plan_rrt, validate_solution,
)
from pushclutter.scene import (
    GOAL_OBJECT, MOVABLE, ROBOT, STATIC,
    BodySpec, ObjectInRegion, ReachGoalObject, Rect, RobotPoseSet, Scene,
    generate_random_scene,
)

from _util import config_bits


def _scene(bodies, workspace=Rect(-1, -1, 1.5, 1)):
    return Scene(name="t", bodies=tuple(bodies), workspace=workspace,
                 pocket=Rect(0.05, -0.06, 0.20, 0.06))


def empty_shelf():
    """Robot at the origin, goal disk 0.4 m straight ahead, nothing else."""
    return _scene([
        BodySpec("robot", ROBOT, Box(0.05, 0.08), Pose2(0.0, 0.0, 0.0)),
        BodySpec("goal", GOAL_OBJECT, Disk(0.04), Pose2(0.4, 0.0, 0.0)),
    ])


def sealed_goal_scene():
    """Goal disk enclosed on all four sides by statics; unreachable."""
    return _scene([
        BodySpec("robot", ROBOT, Box(0.05, 0.08), Pose2(-0.5, 0.0, 0.0)),
        BodySpec("goal", GOAL_OBJECT, Disk(0.04), Pose2(0.4, 0.0, 0.0)),
        BodySpec("wn", STATIC, Box(0.12, 0.02), Pose2(0.4, 0.12, 0)),
        BodySpec("ws", STATIC, Box(0.12, 0.02), Pose2(0.4, -0.12, 0)),
        BodySpec("we", STATIC, Box(0.02, 0.12), Pose2(0.52, 0.0, 0)),
        BodySpec("ww", STATIC, Box(0.02, 0.12), Pose2(0.28, 0.0, 0)),
    ])


@pytest.fixture(params=[RRT, KPIECE])
def algorithm(request):
    return request.param


# ---------------------------------------------------------------------------
# solving

def test_solves_empty_shelf_and_replays(algorithm):
    scene = empty_shelf()
    q = scene.initial_configuration()
    req = PlannerRequest(start=q, goal=ReachGoalObject(), algorithm=algorithm,
                         rng_seed=7, iteration_budget=5000)
    res = plan(req, scene)
    assert res.status == SOLVED
    assert validate_solution(q, res.controls, ReachGoalObject(), scene)
    assert res.stats.tree_size >= 1
    assert res.stats.wall_time == 0.0


def test_start_already_satisfying_goal(algorithm):
    scene = empty_shelf()
    q = scene.initial_configuration()
    goal = RobotPoseSet(poses=(q.robot,), tol_xy=0.01, tol_theta=0.1)
    res = plan(PlannerRequest(start=q, goal=goal, algorithm=algorithm,
                              rng_seed=1, iteration_budget=10), scene)
    assert res.status == SOLVED
    assert res.controls == ()
    assert res.stats.iterations == 0
    assert res.final_state == q


def test_invalid_start_is_infeasible(algorithm):
    scene = sealed_goal_scene()
    q = scene.initial_configuration()
    # robot buried in the western wall
    q_bad = q.replace_robot(Pose2(0.28, 0.0, 0.0))
    res = plan(PlannerRequest(start=q_bad, goal=ReachGoalObject(),
                              algorithm=algorithm, rng_seed=1,
                              iteration_budget=50), scene)
    assert res.status == INFEASIBLE
    assert res.controls == ()
    assert res.final_state == q_bad


def test_sealed_goal_times_out(algorithm):
    scene = sealed_goal_scene()
    q = scene.initial_configuration()
    res = plan(PlannerRequest(start=q, goal=ReachGoalObject(),
                              algorithm=algorithm, rng_seed=3,
                              iteration_budget=1200), scene)
    assert res.status == TIMED_OUT
    assert res.stats.iterations == 1200


def test_multi_goal_pose_set():
    scene = empty_shelf()
    q = scene.initial_configuration()
    goal = RobotPoseSet(poses=(Pose2(0.3, 0.5, 1.0), Pose2(0.3, -0.5, -1.0)),
                        tol_xy=0.05, tol_theta=0.4)
    res = plan_rrt(PlannerRequest(start=q, goal=goal, rng_seed=2,
                                  iteration_budget=4000), scene)
    assert res.status == SOLVED
    best = min(se2_distance(res.final_state.robot, p, 0.0) for p in goal.poses)
    assert best <= 0.05 + 1e-9


def test_region_goal_pushes_object():
    scene = empty_shelf()
    q = scene.initial_configuration()
    goal = ObjectInRegion("goal", (0.7, 0.0), 0.10)
    res = plan_rrt(PlannerRequest(start=q, goal=goal, rng_seed=3,
                                  iteration_budget=6000), scene)
    assert res.status == SOLVED
    assert validate_solution(q, res.controls, goal, scene)
    p = res.final_state.objects["goal"]
    assert math.hypot(p.x - 0.7, p.y) <= 0.05


# ---------------------------------------------------------------------------
# determinism and tree soundness

def test_iteration_mode_is_deterministic(algorithm):
    scene = empty_shelf()
    q = scene.initial_configuration()
    goal = ObjectInRegion("goal", (0.65, 0.1), 0.10)
    req = PlannerRequest(start=q, goal=goal, algorithm=algorithm,
                         rng_seed=11, iteration_budget=2500)
    a = plan(req, scene)
    b = plan(req, scene)
    assert a == b
    assert config_bits(a.final_state) == config_bits(b.final_state)


def test_tree_edges_repropagate_bit_exact(algorithm):
    scene = empty_shelf()
    q = scene.initial_configuration()
    trace = PlannerTrace()
    plan(PlannerRequest(start=q, goal=ObjectInRegion("goal", (0.7, 0.0), 0.10),
                        algorithm=algorithm, rng_seed=5,
                        iteration_budget=800), scene, trace)
    assert len(trace.nodes) >= 2
    for parent_idx, control, state in trace.nodes[1:]:
        parent_state = trace.nodes[parent_idx][2]
        again, report = propagate(parent_state, control, scene)
        assert report.valid
        assert config_bits(again) == config_bits(state)


def test_goal_samples_stay_inside_workspace():
    # sealed goal: the full budget is consumed, so the bias fires often
    scene = sealed_goal_scene()
    q = scene.initial_configuration()
    trace = PlannerTrace()
    params = PlannerParams(goal_bias=0.5)
    plan_rrt(PlannerRequest(start=q, goal=ReachGoalObject(), rng_seed=9,
                            iteration_budget=400, params=params), scene, trace)
    assert len(trace.goal_samples) >= 100
    ws = scene.workspace
    for p in trace.goal_samples:
        assert ws.xmin <= p.x <= ws.xmax
        assert ws.ymin <= p.y <= ws.ymax


def test_goal_samples_inside_workspace_on_shelf(shelf_scene):
    q = shelf_scene.initial_configuration()
    trace = PlannerTrace()
    params = PlannerParams(goal_bias=0.5)
    plan_rrt(PlannerRequest(start=q, goal=ReachGoalObject(), rng_seed=9,
                            iteration_budget=400, params=params),
             shelf_scene, trace)
    assert trace.goal_samples
    ws = shelf_scene.workspace
    for p in trace.goal_samples:
        assert ws.xmin <= p.x <= ws.xmax
        assert ws.ymin <= p.y <= ws.ymax


def test_region_goal_samples_stay_inside_workspace():
    scene = empty_shelf()
    q = scene.initial_configuration()
    trace = PlannerTrace()
    plan_rrt(PlannerRequest(start=q, goal=ObjectInRegion("goal", (1.4, 0.9), 0.1),
                            rng_seed=9, iteration_budget=300,
                            params=PlannerParams(goal_bias=0.6)), scene, trace)
    ws = scene.workspace
    for p in trace.goal_samples:
        assert ws.xmin <= p.x <= ws.xmax
        assert ws.ymin <= p.y <= ws.ymax


# ---------------------------------------------------------------------------
# KPIECE coverage bookkeeping

def test_kpiece_coverage_accounting():
    scene = empty_shelf()
    q = scene.initial_configuration()
    trace = PlannerTrace()
    plan_kpiece(PlannerRequest(start=q, goal=ObjectInRegion("goal", (0.7, 0), 0.1),
                               algorithm=KPIECE, rng_seed=4,
                               iteration_budget=400), scene, trace)
    assert len(trace.coverage) >= 100
    prev = 0
    for occupied, interior, exterior in trace.coverage:
        assert interior + exterior == occupied
        assert occupied >= prev
        prev = occupied
    # open space: the frontier never closes
    assert trace.coverage[99][2] >= 1


# ---------------------------------------------------------------------------
# ghost / frozen planning modes

def test_ghost_mode_ignores_movables(shelf_scene):
    q = shelf_scene.initial_configuration()
    goal_pose = q.objects[shelf_scene.goal_id()]
    target = Pose2(goal_pose.x, goal_pose.y - 0.25, math.pi / 2)
    goal = RobotPoseSet(poses=(target,), tol_xy=0.05, tol_theta=0.6)
    req = PlannerRequest(start=q, goal=goal, rng_seed=6,
                         iteration_budget=6000, robot_ghost=True)
    res = plan_rrt(req, shelf_scene)
    assert res.status == SOLVED
    # nothing on the shelf moved
    for oid, p in res.final_state.objects.items():
        assert p == q.objects[oid]
    assert validate_solution(q, res.controls, goal, shelf_scene,
                             robot_ghost=True)


def test_active_ids_keep_other_objects_frozen(sparse_scene):
    q = sparse_scene.initial_configuration()
    # push the mouth-side object 0.2 m deeper in; the goal object stays frozen
    target_id = next(i for i in sorted(q.objects)
                     if i != sparse_scene.goal_id())
    other_id = sparse_scene.goal_id()
    c = q.objects[target_id]
    goal = ObjectInRegion(target_id, (c.x, c.y + 0.2),
                          sparse_scene.region_diameter)
    req = PlannerRequest(start=q, goal=goal, rng_seed=8,
                         iteration_budget=8000,
                         active_ids=frozenset({target_id}))
    res = plan_rrt(req, sparse_scene)
    assert res.status == SOLVED
    assert res.final_state.objects[other_id] == q.objects[other_id]
    assert validate_solution(q, res.controls, goal, sparse_scene,
                             active_ids=frozenset({target_id}))


# ---------------------------------------------------------------------------
# validateSolution

def test_validate_empty_controls_when_goal_holds():
    scene = empty_shelf()
    q = scene.initial_configuration()
    goal = RobotPoseSet(poses=(q.robot,), tol_xy=0.01, tol_theta=0.1)
    assert validate_solution(q, [], goal, scene)


def test_validate_rejects_mutated_plans():
    scene = empty_shelf()
    q = scene.initial_configuration()
    goal = ObjectInRegion("goal", (0.7, 0.0), 0.10)
    res = plan_rrt(PlannerRequest(start=q, goal=goal, rng_seed=3,
                                  iteration_budget=6000), scene)
    assert res.status == SOLVED
    assert len(res.controls) >= 2
    rejected = 0
    for i in range(len(res.controls)):
        mutated = list(res.controls[:i]) + list(res.controls[i + 1:])
        if not validate_solution(q, mutated, goal, scene):
            rejected += 1
    assert rejected >= 1


# ---------------------------------------------------------------------------
# request validation

def test_request_requires_exactly_one_budget():
    scene = empty_shelf()
    q = scene.initial_configuration()
    with pytest.raises(ValueError):
        PlannerRequest(start=q, goal=ReachGoalObject())
    with pytest.raises(ValueError):
        PlannerRequest(start=q, goal=ReachGoalObject(), time_budget=1.0,
                       iteration_budget=10)


def test_request_rejects_unknown_algorithm():
    scene = empty_shelf()
    q = scene.initial_configuration()
    with pytest.raises(ValueError):
        PlannerRequest(start=q, goal=ReachGoalObject(), algorithm="prm",
                       iteration_budget=10)


def test_params_validation():
    with pytest.raises(ValueError):
        PlannerParams(goal_bias=1.5)
    with pytest.raises(ValueError):
        PlannerParams(max_controls_per_extend=0)
    with pytest.raises(ValueError):
        PlannerParams(kpiece_cell_size=0.0)


def test_wall_clock_budget_times_out():
    scene = sealed_goal_scene()
    q = scene.initial_configuration()
    res = plan_rrt(PlannerRequest(start=q, goal=ReachGoalObject(),
                                  rng_seed=1, time_budget=0.2), scene)
    assert res.status == TIMED_OUT
    assert res.stats.wall_time >= 0.2
