"""Quasi-static pushing dynamics: propagation, validity checks, rollouts.

The system state couples the robot pose with every movable object pose.
Propagation advances the robot kinematically at a fixed substep and projects
objects out of contact; objects never move unless something touches them.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .geometry import Pose2, circumradius, overlap, shape_params

# projection iterations per substep before a contact cluster counts as jammed
MAX_PROJECTION_ITERATIONS = 32

ROBOT_HITS_STATIC = "robot_hits_static"
OBJECT_OUT_OF_BOUNDS = "object_out_of_bounds"
UNRESOLVED_PENETRATION = "unresolved_penetration"

_KIND_NAMES = {
    kernels.ROBOT_HITS_STATIC: ROBOT_HITS_STATIC,
    kernels.OBJECT_OUT_OF_BOUNDS: OBJECT_OUT_OF_BOUNDS,
    kernels.UNRESOLVED_PENETRATION: UNRESOLVED_PENETRATION,
}


class ControlLimitError(ValueError):
    """Control outside the scene's limits; nothing is clamped silently."""


@dataclass(frozen=True)
class SystemConfiguration:
    """Robot pose plus the pose of every movable object, keyed by id.

    The object map is re-ordered to sorted-by-id at construction so
    iteration order is canonical.
    """

    robot: Pose2
    objects: dict

    def __post_init__(self):
        object.__setattr__(self, "objects", dict(sorted(self.objects.items())))

    def replace_object(self, object_id: str, pose: Pose2) -> "SystemConfiguration":
        if object_id not in self.objects:
            raise KeyError(f"unknown object id {object_id!r}")
        objs = dict(self.objects)
        objs[object_id] = pose
        return SystemConfiguration(robot=self.robot, objects=objs)

    def replace_robot(self, pose: Pose2) -> "SystemConfiguration":
        return SystemConfiguration(robot=pose, objects=self.objects)


@dataclass(frozen=True)
class Control:
    """Planar robot velocity command held for a duration."""

    vx: float
    vy: float
    omega: float
    duration: float

    def __post_init__(self):
        for name in ("vx", "vy", "omega", "duration"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"control {name} must be finite, got {v!r}")


@dataclass(frozen=True)
class Violation:
    kind: str
    body: str


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    violations: tuple

    def __bool__(self):
        return self.valid


VALID = ValidityReport(valid=True, violations=())


class _SceneArrays:
    """Scene geometry flattened into kernel-ready arrays."""

    __slots__ = ("ids", "index", "robot_id", "rtype", "rp0", "rp1", "rrad",
                 "mtype", "mp0", "mp1", "mrad", "all_active",
                 "sx", "sy", "st", "stype", "sp0", "sp1", "srad")

    def __init__(self, scene):
        movables = scene.movable_specs()
        self.ids = tuple(b.id for b in movables)
        self.index = {oid: i for i, oid in enumerate(self.ids)}
        robot = scene.robot_spec()
        self.robot_id = robot.id
        self.rtype, self.rp0, self.rp1 = shape_params(robot.shape)
        self.rrad = circumradius(robot.shape)
        n = len(movables)
        self.mtype = np.empty(n, dtype=np.intc)
        self.mp0 = np.empty(n, dtype=np.float64)
        self.mp1 = np.empty(n, dtype=np.float64)
        self.mrad = np.empty(n, dtype=np.float64)
        for i, b in enumerate(movables):
            self.mtype[i], self.mp0[i], self.mp1[i] = shape_params(b.shape)
            self.mrad[i] = circumradius(b.shape)
        self.all_active = np.ones(n, dtype=np.uint8)
        statics = scene.static_specs()
        ns = len(statics)
        self.sx = np.empty(ns, dtype=np.float64)
        self.sy = np.empty(ns, dtype=np.float64)
        self.st = np.empty(ns, dtype=np.float64)
        self.stype = np.empty(ns, dtype=np.intc)
        self.sp0 = np.empty(ns, dtype=np.float64)
        self.sp1 = np.empty(ns, dtype=np.float64)
        self.srad = np.empty(ns, dtype=np.float64)
        for i, b in enumerate(statics):
            self.sx[i] = b.pose.x
            self.sy[i] = b.pose.y
            self.st[i] = b.pose.theta
            self.stype[i], self.sp0[i], self.sp1[i] = shape_params(b.shape)
            self.srad[i] = circumradius(b.shape)


@lru_cache(maxsize=256)
def _compile(scene) -> _SceneArrays:
    return _SceneArrays(scene)


@lru_cache(maxsize=256)
def _active_mask(scene, active_ids) -> np.ndarray:
    arrays = _compile(scene)
    mask = np.zeros(len(arrays.ids), dtype=np.uint8)
    for oid in active_ids:
        if oid not in arrays.index:
            raise KeyError(f"unknown object id {oid!r}")
        mask[arrays.index[oid]] = 1
    return mask


def check_control(u: Control, scene) -> None:
    """Raise ControlLimitError unless u is within the scene's limits."""
    p = scene.physics
    if abs(u.vx) > p.v_max or abs(u.vy) > p.v_max:
        raise ControlLimitError(
            f"velocity ({u.vx}, {u.vy}) exceeds limit {p.v_max}")
    if abs(u.omega) > p.omega_max:
        raise ControlLimitError(f"omega {u.omega} exceeds limit {p.omega_max}")
    if not (0.0 < u.duration <= p.d_max):
        raise ControlLimitError(
            f"duration {u.duration} outside (0, {p.d_max}]")


def propagate(q: SystemConfiguration, u: Control, scene,
              robot_ghost: bool = False,
              active_ids=None) -> tuple:
    """Advance q by one control. Returns (q', report).

    robot_ghost disables robot-movable interaction and active_ids freezes
    every movable not listed (both used by the backward planner); statics
    always constrain the robot. On a violation, integration stops at the
    end of the offending substep and q' is that state.
    """
    check_control(u, scene)
    arrays = _compile(scene)
    ids = arrays.ids
    if len(q.objects) != len(ids):
        raise ValueError("configuration does not match scene movables")
    n = len(ids)
    mx = np.empty(n, dtype=np.float64)
    my = np.empty(n, dtype=np.float64)
    mt = np.empty(n, dtype=np.float64)
    for i, oid in enumerate(ids):
        p = q.objects[oid]
        mx[i] = p.x
        my[i] = p.y
        mt[i] = p.theta
    if active_ids is None:
        active = arrays.all_active
    else:
        active = _active_mask(scene, frozenset(active_ids))
    ph = scene.physics
    ws = scene.workspace
    rx, ry, rt, viol = kernels.propagate(
        q.robot.x, q.robot.y, q.robot.theta,
        arrays.rtype, arrays.rp0, arrays.rp1, arrays.rrad,
        mx, my, mt,
        arrays.mtype, arrays.mp0, arrays.mp1, arrays.mrad,
        active,
        arrays.sx, arrays.sy, arrays.st,
        arrays.stype, arrays.sp0, arrays.sp1, arrays.srad,
        u.vx, u.vy, u.omega, u.duration,
        ph.dt, ph.tol_pen, ph.kappa, MAX_PROJECTION_ITERATIONS,
        ws.xmin, ws.ymin, ws.xmax, ws.ymax,
        1 if robot_ghost else 0,
    )
    old = q.robot
    if rx == old.x and ry == old.y and rt == old.theta:
        robot2 = old
    else:
        robot2 = Pose2(rx, ry, rt)
    objs2 = {}
    for i, oid in enumerate(ids):
        op = q.objects[oid]
        x2 = float(mx[i])
        y2 = float(my[i])
        t2 = float(mt[i])
        if x2 == op.x and y2 == op.y and t2 == op.theta:
            objs2[oid] = op
        else:
            objs2[oid] = Pose2(x2, y2, t2)
    q2 = SystemConfiguration(robot=robot2, objects=objs2)
    if not viol:
        return q2, VALID
    violations = tuple(
        Violation(kind=_KIND_NAMES[k],
                  body=arrays.robot_id if b < 0 else ids[b])
        for k, b in viol)
    return q2, ValidityReport(valid=False, violations=violations)


def check_validity(q: SystemConfiguration, scene) -> ValidityReport:
    """Static validity of a configuration.

    Flags the robot overlapping statics beyond tol_pen, object centers
    outside the workspace, and movable-movable / movable-static
    penetration beyond tol_pen. Robot-movable contact is legal here: the
    robot is allowed to touch what it pushes.
    """
    tol = scene.physics.tol_pen
    ws = scene.workspace
    robot = scene.robot_spec()
    movables = scene.movable_specs()
    statics = scene.static_specs()
    violations = []
    for s in statics:
        c = overlap(robot.shape, q.robot, s.shape, s.pose)
        if c is not None and c.depth > tol:
            violations.append(Violation(kind=ROBOT_HITS_STATIC, body=robot.id))
            break
    for b in movables:
        p = q.objects[b.id]
        if not (ws.xmin <= p.x <= ws.xmax and ws.ymin <= p.y <= ws.ymax):
            violations.append(Violation(kind=OBJECT_OUT_OF_BOUNDS, body=b.id))
    for i, b in enumerate(movables):
        pb = q.objects[b.id]
        unresolved = False
        for other in movables[i + 1:]:
            c = overlap(b.shape, pb, other.shape, q.objects[other.id])
            if c is not None and c.depth > tol:
                unresolved = True
                break
        if not unresolved:
            for s in statics:
                c = overlap(b.shape, pb, s.shape, s.pose)
                if c is not None and c.depth > tol:
                    unresolved = True
                    break
        if unresolved:
            violations.append(Violation(kind=UNRESOLVED_PENETRATION, body=b.id))
    if not violations:
        return VALID
    return ValidityReport(valid=False, violations=tuple(violations))


def rollout_controls(q0: SystemConfiguration, controls, scene,
                     robot_ghost: bool = False,
                     active_ids=None) -> tuple:
    """Propagate a control sequence. Returns (trajectory, report).

    The trajectory includes q0 and each post-control state; execution
    stops at the first invalid state, which stays in the trajectory.
    """
    trajectory = [q0]
    q = q0
    for u in controls:
        q, report = propagate(q, u, scene,
                              robot_ghost=robot_ghost, active_ids=active_ids)
        trajectory.append(q)
        if not report.valid:
            return trajectory, report
    return trajectory, VALID
