"""Dynamics tests: propagation, contact response, validity, rollouts.

The derived push example is checked against a fine-substep reference run
(same model at dt = 1e-4), per the oracle-first rule.
"""

import dataclasses
import math
import random

import pytest

from pushclutter.dynamics import (
    Control, ControlLimitError, SystemConfiguration,
    check_validity, propagate, rollout_controls,
)
from pushclutter.geometry import Box, Disk, Pose2, circumradius, overlap
from pushclutter.scene import (
    GOAL_OBJECT, ROBOT, STATIC, BodySpec, Physics, Rect, Scene,
    generate_random_scene,
)

from _util import config_bits, float_bits, pose_bits


def make_scene(bodies, workspace=Rect(-2, -2, 2, 2), **kw):
    return Scene(name="test", bodies=tuple(bodies), workspace=workspace,
                 pocket=Rect(0.05, -0.06, 0.20, 0.06), **kw)


def open_scene(robot_shape, robot_pose, objects, statics=(), **kw):
    """Scene with no walls unless given; first object is the goal object."""
    bodies = [BodySpec("robot", ROBOT, robot_shape, robot_pose)]
    for i, (shape, pose) in enumerate(objects):
        role = GOAL_OBJECT if i == 0 else "movable"
        bodies.append(BodySpec(f"o{i}", role, shape, pose))
    for i, (shape, pose) in enumerate(statics):
        bodies.append(BodySpec(f"s{i}", STATIC, shape, pose))
    return make_scene(bodies, **kw)


# ---------------------------------------------------------------------------
# basic propagation

def test_zero_control_is_identity(shelf_scene):
    q = shelf_scene.initial_configuration()
    q2, report = propagate(q, Control(0, 0, 0, 1.0), shelf_scene)
    assert report.valid
    assert q2 == q
    assert config_bits(q2) == config_bits(q)


def test_free_space_kinematics():
    scene = open_scene(Disk(0.1), Pose2(0, 0, 0), [(Disk(0.04), Pose2(1.5, 1.5))])
    q = scene.initial_configuration()
    q2, report = propagate(q, Control(0.1, 0, 0, 2.0), scene)
    assert report.valid
    assert abs(q2.robot.x - 0.2) < 1e-12
    assert q2.robot.y == 0.0
    assert q2.robot.theta == 0.0


def test_rotation_wraps():
    scene = open_scene(Disk(0.1), Pose2(0, 0, 3.0), [(Disk(0.04), Pose2(1.5, 1.5))])
    q = scene.initial_configuration()
    q2, _ = propagate(q, Control(0, 0, 0.5, 2.0), scene)
    assert abs(q2.robot.theta - (4.0 - 2 * math.pi)) < 1e-9
    assert -math.pi < q2.robot.theta <= math.pi


def test_control_limits_rejected_not_clamped(shelf_scene):
    q = shelf_scene.initial_configuration()
    for bad in (Control(0.25, 0, 0, 1.0),
                Control(0, -0.21, 0, 1.0),
                Control(0, 0, 0.6, 1.0),
                Control(0.1, 0, 0, 0.0),
                Control(0.1, 0, 0, 3.5),
                Control(0.1, 0, 0, -1.0)):
        with pytest.raises(ControlLimitError):
            propagate(q, bad, shelf_scene)


def test_propagate_deterministic_repeats(shelf_scene):
    q = shelf_scene.initial_configuration()
    u = Control(0.0, 0.15, 0.1, 2.5)
    first = propagate(q, u, shelf_scene)
    ref = config_bits(first[0])
    for _ in range(20):
        q2, report = propagate(q, u, shelf_scene)
        assert config_bits(q2) == ref
        assert report == first[1]


# ---------------------------------------------------------------------------
# pushing

def _push_scene(dt=0.01):
    return open_scene(Disk(0.15), Pose2(0, 0, 0),
                      [(Disk(0.05), Pose2(0.22, 0))],
                      physics=Physics(dt=dt))


def test_head_on_disk_push_against_fine_substep_oracle():
    """Robot disk pushes an object disk 0.02 m ahead; compare against the
    same model integrated at dt = 1e-4."""
    scene = _push_scene()
    q = scene.initial_configuration()
    u = Control(0.05, 0, 0, 2.0)
    q2, report = propagate(q, u, scene)
    assert report.valid
    obj = q2.objects["o0"]
    assert obj.x >= 0.25
    assert abs(obj.y) <= 1e-9

    fine = _push_scene(dt=1e-4)
    q2f, report_f = propagate(q, u, fine)
    assert report_f.valid
    objf = q2f.objects["o0"]
    assert abs(obj.x - objf.x) <= 1e-3
    assert abs(obj.y - objf.y) <= 1e-3


def test_push_displacement_is_monotone_along_push():
    scene = _push_scene()
    q = scene.initial_configuration()
    last_x = q.objects["o0"].x
    for _ in range(4):
        q, report = propagate(q, Control(0.05, 0, 0, 0.5), scene)
        assert report.valid
        assert q.objects["o0"].x >= last_x
        assert abs(q.objects["o0"].y) <= 1e-9
        last_x = q.objects["o0"].x


def test_box_corner_push_rotates():
    # off-center contact must turn the box, sign given by the lever arm
    scene = open_scene(Disk(0.05), Pose2(-0.11, 0.06, 0),
                       [(Box(0.08, 0.08), Pose2(0.0, 0.0, 0.0))])
    q = scene.initial_configuration()
    q2, report = propagate(q, Control(0.1, 0, 0, 1.2), scene)
    assert report.valid
    box = q2.objects["o0"]
    assert box.x > 0.0
    assert box.theta != 0.0
    # pushing +x above the center means a negative (clockwise) twist
    assert box.theta < 0.0


def test_non_penetration_after_valid_pushes(shelf_scene):
    rng = random.Random(5)
    q = shelf_scene.initial_configuration()
    movables = shelf_scene.movable_specs()
    statics = shelf_scene.static_specs()
    tol = shelf_scene.physics.tol_pen
    for _ in range(25):
        u = Control(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                    rng.uniform(-0.5, 0.5), rng.uniform(0.2, 2.0))
        q2, report = propagate(q, u, shelf_scene)
        if not report.valid:
            continue
        q = q2
        for i, a in enumerate(movables):
            pa = q.objects[a.id]
            for b in movables[i + 1:]:
                c = overlap(a.shape, pa, b.shape, q.objects[b.id])
                assert c is None or c.depth <= tol
            for s in statics:
                c = overlap(a.shape, pa, s.shape, s.pose)
                assert c is None or c.depth <= tol


def test_quasi_static_rest_bit_exact():
    """Controls whose swept robot circle stays 0.05 m clear of every object
    leave every object pose bit-identical."""
    rng = random.Random(9)
    checked = 0
    for seed in range(40):
        scene = generate_random_scene(seed + 100, 6)
        q = scene.initial_configuration()
        rr = circumradius(scene.robot_spec().shape)
        for _ in range(12):
            u = Control(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                        rng.uniform(-0.5, 0.5), rng.uniform(0.1, 3.0))
            x0, y0 = q.robot.x, q.robot.y
            x1, y1 = x0 + u.vx * u.duration, y0 + u.vy * u.duration
            clear = True
            for b in scene.movable_specs():
                p = q.objects[b.id]
                if _segment_point_distance(x0, y0, x1, y1, p.x, p.y) < \
                        rr + circumradius(b.shape) + 0.05:
                    clear = False
                    break
            if not clear:
                continue
            before = {oid: pose_bits(p) for oid, p in q.objects.items()}
            q2, report = propagate(q, u, scene)
            for oid, p in q2.objects.items():
                assert pose_bits(p) == before[oid]
            checked += 1
            if report.valid:
                q = q2
    assert checked >= 100


def _segment_point_distance(x0, y0, x1, y1, px, py):
    dx, dy = x1 - x0, y1 - y0
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return math.hypot(px - x0, py - y0)
    t = max(0.0, min(1.0, ((px - x0) * dx + (py - y0) * dy) / L2))
    return math.hypot(px - (x0 + t * dx), py - (y0 + t * dy))


def test_substep_halving_agreement():
    """Halving dt moves final poses by at most 1e-3 m on the scripted
    push suite (head-on and mildly offset pushes)."""
    for case in push_suite():
        coarse = _run_push_case(case, dt=0.01)
        fine = _run_push_case(case, dt=0.005)
        for oid in coarse.objects:
            pc, pf = coarse.objects[oid], fine.objects[oid]
            assert math.hypot(pc.x - pf.x, pc.y - pf.y) <= 1e-3, (case, oid)


def push_suite():
    """Ten scripted single-object pushes: shapes x offsets x speeds."""
    cases = []
    shapes = [Disk(0.05), Box(0.06, 0.04)]
    for i, offset in enumerate((0.0, 0.01, -0.02, 0.015, 0.005)):
        for j, shape in enumerate(shapes):
            speed = 0.05 + 0.03 * ((i + j) % 3)
            cases.append((shape, offset, speed))
    assert len(cases) == 10
    return cases


def _run_push_case(case, dt):
    shape, offset, speed = case
    scene = open_scene(Disk(0.15), Pose2(0, 0, 0),
                       [(shape, Pose2(0.22, offset))],
                       physics=Physics(dt=dt))
    q = scene.initial_configuration()
    q2, report = propagate(q, Control(speed, 0, 0, 2.0), scene)
    assert report.valid
    return q2


# ---------------------------------------------------------------------------
# violations

def test_robot_hits_static_truncates_rollout():
    # wall face 0.05 m ahead of the robot's leading edge
    scene = open_scene(Disk(0.1), Pose2(0, 0, 0),
                       [(Disk(0.04), Pose2(0, 1.5))],
                       statics=[(Box(0.05, 0.4), Pose2(0.2, 0, 0))])
    q = scene.initial_configuration()
    traj, report = rollout_controls(q, [Control(0.1, 0, 0, 1.0)], scene)
    assert not report.valid
    assert report.violations[0].kind == "robot_hits_static"
    assert report.violations[0].body == "robot"
    assert len(traj) == 2


def test_object_pushed_out_of_workspace():
    scene = open_scene(Disk(0.1), Pose2(0, 0, 0),
                       [(Disk(0.05), Pose2(0.2, 0))],
                       workspace=Rect(-0.5, -0.5, 0.4, 0.5))
    q = scene.initial_configuration()
    q2, report = propagate(q, Control(0.2, 0, 0, 2.0), scene)
    assert not report.valid
    assert any(v.kind == "object_out_of_bounds" and v.body == "o0"
               for v in report.violations)
    assert q2.objects["o0"].x > 0.4


def test_jammed_stack_reports_unresolved_penetration():
    # box trapped between the advancing robot and a wall
    scene = open_scene(Disk(0.1), Pose2(0, 0, 0),
                       [(Box(0.05, 0.05), Pose2(0.16, 0))],
                       statics=[(Box(0.02, 0.4), Pose2(0.3, 0, 0))])
    q = scene.initial_configuration()
    _, report = rollout_controls(q, [Control(0.15, 0, 0, 2.0)], scene)
    assert not report.valid
    kinds = {v.kind for v in report.violations}
    assert kinds & {"unresolved_penetration", "robot_hits_static"}


def test_ghost_robot_passes_through_movables():
    scene = open_scene(Disk(0.1), Pose2(0, 0, 0), [(Disk(0.05), Pose2(0.3, 0))])
    q = scene.initial_configuration()
    q2, report = propagate(q, Control(0.2, 0, 0, 3.0), scene, robot_ghost=True)
    assert report.valid
    assert abs(q2.robot.x - 0.6) < 1e-9
    assert pose_bits(q2.objects["o0"]) == pose_bits(q.objects["o0"])


def test_ghost_robot_still_blocked_by_statics():
    scene = open_scene(Disk(0.1), Pose2(0, 0, 0),
                       [(Disk(0.05), Pose2(0, 1.5))],
                       statics=[(Box(0.05, 0.4), Pose2(0.3, 0, 0))])
    q = scene.initial_configuration()
    _, report = propagate(q, Control(0.2, 0, 0, 3.0), scene, robot_ghost=True)
    assert not report.valid
    assert report.violations[0].kind == "robot_hits_static"


def test_active_ids_freeze_other_movables():
    scene = open_scene(Disk(0.1), Pose2(0, 0, 0),
                       [(Disk(0.05), Pose2(0.2, 0)), (Disk(0.05), Pose2(0.5, 0))])
    q = scene.initial_configuration()
    q2, report = propagate(q, Control(0.15, 0, 0, 3.0), scene, active_ids={"o0"})
    assert report.valid
    assert q2.objects["o0"].x > 0.5  # pushed through the frozen ghost
    assert pose_bits(q2.objects["o1"]) == pose_bits(q.objects["o1"])


# ---------------------------------------------------------------------------
# checkValidity

def test_generated_scene_is_valid(shelf_scene):
    report = check_validity(shelf_scene.initial_configuration(), shelf_scene)
    assert report.valid
    assert report.violations == ()


def test_robot_overlapping_wall_flagged(shelf_scene):
    q = shelf_scene.initial_configuration()
    # robot rotated to face +y has x extent 0.08; center at x=0.07 digs
    # 0.01 m into the left wall (wall face at x=0)
    q_bad = SystemConfiguration(robot=Pose2(0.07, 0.3, 1.57079633),
                                objects=q.objects)
    report = check_validity(q_bad, shelf_scene)
    assert not report.valid
    assert report.violations[0].kind == "robot_hits_static"


def test_object_out_of_bounds_flagged(shelf_scene):
    q = shelf_scene.initial_configuration()
    ws = shelf_scene.workspace
    q_bad = q.replace_object("goal", Pose2(ws.xmin - 0.05, 0.3, 0))
    report = check_validity(q_bad, shelf_scene)
    assert any(v.kind == "object_out_of_bounds" and v.body == "goal"
               for v in report.violations)


def test_robot_touching_movable_is_legal(shelf_scene):
    q = shelf_scene.initial_configuration()
    goal = q.objects["goal"]
    # drop the robot right on top of the goal object: robot-movable
    # overlap alone must not invalidate a configuration
    q_touch = SystemConfiguration(robot=Pose2(goal.x, goal.y, 0), objects=q.objects)
    report = check_validity(q_touch, shelf_scene)
    assert report.valid


def test_movable_penetration_flagged(shelf_scene):
    q = shelf_scene.initial_configuration()
    ids = sorted(q.objects)
    a, b = ids[0], ids[1]
    q_bad = q.replace_object(a, q.objects[b])
    report = check_validity(q_bad, shelf_scene)
    assert any(v.kind == "unresolved_penetration" for v in report.violations)


# ---------------------------------------------------------------------------
# rollouts

def test_rollout_empty_program(shelf_scene):
    q = shelf_scene.initial_configuration()
    traj, report = rollout_controls(q, [], shelf_scene)
    assert traj == [q]
    assert report.valid


def test_rollout_composition():
    scene = open_scene(Disk(0.1), Pose2(0, 0, 0), [(Disk(0.04), Pose2(1.5, 1.5))])
    q = scene.initial_configuration()
    traj, report = rollout_controls(
        q, [Control(0.1, 0, 0, 1.0), Control(0, 0.1, 0, 1.0)], scene)
    assert report.valid
    assert len(traj) == 3
    assert abs(traj[-1].robot.x - 0.1) < 1e-12
    assert abs(traj[-1].robot.y - 0.1) < 1e-12
    assert traj[-1].robot.theta == 0.0
