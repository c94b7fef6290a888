"""Scene definitions, goal predicates, the random generator, and the
versioned text format.

A scene is a shelf seen from above: three static walls, an open front, a
robot staged outside the mouth, one goal object at the back, and movable
clutter in between.
"""

import math
import random
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Union

import yaml

from .dynamics import SystemConfiguration, check_validity
from .geometry import Box, ConvexShape, Disk, Pose2, circumradius, normalize_angle, overlap

SCENE_FORMAT_VERSION = 1

ROBOT = "robot"
MOVABLE = "movable"
GOAL_OBJECT = "goal_object"
STATIC = "static"

_ROLES = (ROBOT, MOVABLE, GOAL_OBJECT, STATIC)


class SceneValidationError(ValueError):
    pass


class SceneParseError(ValueError):
    pass


class SceneGenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(f"degenerate rectangle {self!r}")

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin


@dataclass(frozen=True)
class Physics:
    """Propagation parameters; the limits bound every Control."""

    dt: float = 0.01
    tol_pen: float = 1e-3
    kappa: float = 0.5
    v_max: float = 0.2
    omega_max: float = 0.5
    d_max: float = 3.0

    def __post_init__(self):
        for name in ("dt", "tol_pen", "v_max", "omega_max", "d_max"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"physics.{name} must be positive")
        if self.kappa < 0.0:
            raise ValueError("physics.kappa must be non-negative")


@dataclass(frozen=True)
class BodySpec:
    id: str
    role: str
    shape: ConvexShape
    pose: Pose2

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise ValueError(f"body id must be a non-empty string, got {self.id!r}")
        if self.role not in _ROLES:
            raise ValueError(f"body {self.id!r}: unknown role {self.role!r}")


@dataclass(frozen=True)
class Scene:
    name: str
    bodies: tuple
    workspace: Rect
    pocket: Rect
    region_diameter: float = 0.10
    physics: Physics = field(default_factory=Physics)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "bodies", tuple(self.bodies))
        ids = [b.id for b in self.bodies]
        if len(set(ids)) != len(ids):
            raise SceneValidationError("scene requires unique body ids")
        robots = [b for b in self.bodies if b.role == ROBOT]
        if len(robots) != 1:
            raise SceneValidationError("scene requires exactly one robot body")
        goals = [b for b in self.bodies if b.role == GOAL_OBJECT]
        if len(goals) != 1:
            raise SceneValidationError("scene requires exactly one goal_object body")
        if not self.region_diameter > 0.0:
            raise SceneValidationError("region_diameter must be positive")

    def body(self, body_id: str) -> BodySpec:
        for b in self.bodies:
            if b.id == body_id:
                return b
        raise KeyError(f"unknown body id {body_id!r}")

    def robot_spec(self) -> BodySpec:
        return self._robot

    def goal_id(self) -> str:
        return self._goal_id

    def goal_spec(self) -> BodySpec:
        return self.body(self._goal_id)

    def movable_specs(self) -> tuple:
        """All pushable bodies (goal object included), sorted by id."""
        return self._movables

    def static_specs(self) -> tuple:
        return self._statics

    @cached_property
    def _robot(self):
        return next(b for b in self.bodies if b.role == ROBOT)

    @cached_property
    def _goal_id(self):
        return next(b.id for b in self.bodies if b.role == GOAL_OBJECT)

    @cached_property
    def _movables(self):
        movs = [b for b in self.bodies if b.role in (MOVABLE, GOAL_OBJECT)]
        return tuple(sorted(movs, key=lambda b: b.id))

    @cached_property
    def _statics(self):
        return tuple(b for b in self.bodies if b.role == STATIC)

    def initial_configuration(self) -> SystemConfiguration:
        return SystemConfiguration(
            robot=self.robot_spec().pose,
            objects={b.id: b.pose for b in self.movable_specs()})


@dataclass(frozen=True)
class ReachGoalObject:
    """Goal object centered inside the robot's gripper pocket."""


@dataclass(frozen=True)
class RobotPoseSet:
    """Robot within tolerance of any member pose."""

    poses: tuple
    tol_xy: float
    tol_theta: float

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if not self.poses:
            raise ValueError("RobotPoseSet requires at least one pose")
        if not (self.tol_xy > 0.0 and self.tol_theta > 0.0):
            raise ValueError("RobotPoseSet tolerances must be positive")


@dataclass(frozen=True)
class ObjectInRegion:
    """Named object's center inside a disk region."""

    object_id: str
    centroid: tuple
    diameter: float

    def __post_init__(self):
        if not self.diameter > 0.0:
            raise ValueError("region diameter must be positive")


GoalSpec = Union[ReachGoalObject, RobotPoseSet, ObjectInRegion]


def goal_satisfied(q: SystemConfiguration, goal: GoalSpec, scene: Scene) -> bool:
    """Whether q satisfies the goal predicate."""
    if isinstance(goal, ReachGoalObject):
        target = q.objects[scene.goal_id()]
        lx, ly = q.robot.world_to_local(target.x, target.y)
        return scene.pocket.contains(lx, ly)
    if isinstance(goal, RobotPoseSet):
        for p in goal.poses:
            dx = q.robot.x - p.x
            dy = q.robot.y - p.y
            if math.sqrt(dx * dx + dy * dy) <= goal.tol_xy and \
                    abs(normalize_angle(q.robot.theta - p.theta)) <= goal.tol_theta:
                return True
        return False
    if isinstance(goal, ObjectInRegion):
        if goal.object_id not in q.objects:
            raise KeyError(f"unknown object id {goal.object_id!r}")
        p = q.objects[goal.object_id]
        dx = p.x - goal.centroid[0]
        dy = p.y - goal.centroid[1]
        return math.sqrt(dx * dx + dy * dy) <= 0.5 * goal.diameter
    raise TypeError(f"not a goal spec: {goal!r}")


# ---------------------------------------------------------------------------
# random generation

# shelf interior: x in [0, W], y in [0, D]; the front edge y=0 is open
SHELF_WIDTH = 1.2
SHELF_DEPTH = 0.6
WALL_THICKNESS = 0.04
_PLACE_CLEARANCE = 0.005
_REJECTION_INFLATE = 1e-6
_MAX_REJECTIONS = 10_000

# the shelf board itself: an object whose center leaves it has been
# dropped off an edge, which no later push can undo
_DEFAULT_WORKSPACE = Rect(0.0, 0.0, SHELF_WIDTH, SHELF_DEPTH)
_DEFAULT_POCKET = Rect(0.05, -0.06, 0.20, 0.06)
_ROBOT_SHAPE = Box(0.05, 0.08)
_ROBOT_START = Pose2(0.6, -0.2, 1.57079633)


def _q9(v: float) -> float:
    """Quantize to 9 significant digits so serialized scenes round-trip
    bit-exactly (the text format prints %.9g)."""
    return float(f"{v:.9g}")


def _inflated(shape: ConvexShape) -> ConvexShape:
    if isinstance(shape, Disk):
        return Disk(shape.radius + _REJECTION_INFLATE)
    return Box(shape.half_extent_x + _REJECTION_INFLATE,
               shape.half_extent_y + _REJECTION_INFLATE)


def _static_walls() -> list:
    half_w = WALL_THICKNESS / 2.0
    return [
        BodySpec("wall_back", STATIC,
                 Box(SHELF_WIDTH / 2.0 + WALL_THICKNESS, half_w),
                 Pose2(SHELF_WIDTH / 2.0, SHELF_DEPTH + half_w, 0.0)),
        BodySpec("wall_left", STATIC,
                 Box(half_w, SHELF_DEPTH / 2.0),
                 Pose2(-half_w, SHELF_DEPTH / 2.0, 0.0)),
        BodySpec("wall_right", STATIC,
                 Box(half_w, SHELF_DEPTH / 2.0),
                 Pose2(SHELF_WIDTH + half_w, SHELF_DEPTH / 2.0, 0.0)),
    ]


def _random_shape(rng: random.Random) -> ConvexShape:
    if rng.random() < 0.5:
        return Disk(_q9(rng.uniform(0.03, 0.06)))
    return Box(_q9(rng.uniform(0.03, 0.07)), _q9(rng.uniform(0.03, 0.07)))


def _placement_clear(shape: ConvexShape, pose: Pose2, placed) -> bool:
    infl = _inflated(shape)
    for other_shape, other_pose in placed:
        if overlap(infl, pose, _inflated(other_shape), other_pose) is not None:
            return False
    return True


def generate_random_scene(seed: int, n_movables: int = 10,
                          name: Optional[str] = None) -> Scene:
    """Generate a shelf scene, deterministic in (seed, n_movables).

    The goal object lands in the rear 20% of the shelf depth; the other
    n_movables - 1 objects are rejection-sampled over the interior so
    nothing overlaps at the start.
    """
    if n_movables < 1:
        raise ValueError(f"n_movables must be >= 1, got {n_movables}")
    rng = random.Random(seed)
    walls = _static_walls()
    robot = BodySpec("robot", ROBOT, _ROBOT_SHAPE, _ROBOT_START)
    placed = [(b.shape, b.pose) for b in walls]
    placed.append((robot.shape, robot.pose))

    bodies = [robot] + walls

    def sample_pose(shape, ylo, yhi):
        cr = circumradius(shape)
        x = rng.uniform(cr + _PLACE_CLEARANCE, SHELF_WIDTH - cr - _PLACE_CLEARANCE)
        lo = max(ylo, cr + _PLACE_CLEARANCE)
        hi = min(yhi, SHELF_DEPTH - cr - _PLACE_CLEARANCE)
        if lo >= hi:
            raise SceneGenerationError(
                f"scene {seed}: object too large for its placement band")
        y = rng.uniform(lo, hi)
        theta = rng.uniform(-math.pi, math.pi) if isinstance(shape, Box) else 0.0
        return Pose2(_q9(x), _q9(y), _q9(theta))

    def place(body_id, role, ylo, yhi):
        shape = _random_shape(rng)
        for _ in range(_MAX_REJECTIONS):
            pose = sample_pose(shape, ylo, yhi)
            if _placement_clear(shape, pose, placed):
                placed.append((shape, pose))
                bodies.append(BodySpec(body_id, role, shape, pose))
                return
        raise SceneGenerationError(
            f"scene {seed}: no room for {body_id!r} after {_MAX_REJECTIONS} samples")

    # rear 20% band of the shelf depth
    place("goal", GOAL_OBJECT, 0.8 * SHELF_DEPTH, SHELF_DEPTH)
    for k in range(1, n_movables):
        place(f"obj_{k:02d}", MOVABLE, 0.0, SHELF_DEPTH)

    scene = Scene(
        name=name if name is not None else f"scene_{seed}",
        bodies=tuple(bodies),
        workspace=_DEFAULT_WORKSPACE,
        pocket=_DEFAULT_POCKET,
        physics=Physics(),
        seed=seed,
    )
    report = check_validity(scene.initial_configuration(), scene)
    if not report.valid:
        raise SceneGenerationError(
            f"scene {seed}: generated start state is invalid: {report.violations}")
    return scene


# ---------------------------------------------------------------------------
# text format (versioned; see docs/scene_format_v1.md)

def _fmt(v: float) -> str:
    return f"{float(v):.9g}"


def _fmt_pose(p: Pose2) -> str:
    return f"[{_fmt(p.x)}, {_fmt(p.y)}, {_fmt(p.theta)}]"


def _fmt_shape(s: ConvexShape) -> str:
    if isinstance(s, Disk):
        return f"{{kind: disk, r: {_fmt(s.radius)}}}"
    return f"{{kind: box, hx: {_fmt(s.half_extent_x)}, hy: {_fmt(s.half_extent_y)}}}"


def serialize_scene(scene: Scene) -> str:
    """Render a scene to the versioned text format (9 significant digits)."""
    ph = scene.physics
    ws = scene.workspace
    pk = scene.pocket
    lines = [
        f"version: {SCENE_FORMAT_VERSION}",
        f"name: {scene.name}",
        f"seed: {scene.seed}",
        f"workspace: [{_fmt(ws.xmin)}, {_fmt(ws.ymin)}, {_fmt(ws.xmax)}, {_fmt(ws.ymax)}]",
        f"pocket: [{_fmt(pk.xmin)}, {_fmt(pk.ymin)}, {_fmt(pk.xmax)}, {_fmt(pk.ymax)}]",
        f"region_diameter: {_fmt(scene.region_diameter)}",
        (f"physics: {{dt: {_fmt(ph.dt)}, tol_pen: {_fmt(ph.tol_pen)}, "
         f"kappa: {_fmt(ph.kappa)}, v_max: {_fmt(ph.v_max)}, "
         f"omega_max: {_fmt(ph.omega_max)}, d_max: {_fmt(ph.d_max)}}}"),
        "bodies:",
    ]
    for b in scene.bodies:
        lines.append(f"- {{id: {b.id}, role: {b.role}, "
                     f"shape: {_fmt_shape(b.shape)}, pose: {_fmt_pose(b.pose)}}}")
    return "\n".join(lines) + "\n"


def _need(mapping, key, path):
    if not isinstance(mapping, dict):
        raise SceneParseError(f"{path}: expected a mapping")
    if key not in mapping:
        raise SceneParseError(f"{path}.{key}: missing required field")
    return mapping[key]


def _num(v, path) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SceneParseError(f"{path}: expected a number, got {v!r}")
    return float(v)


def _rect(v, path) -> Rect:
    if not (isinstance(v, list) and len(v) == 4):
        raise SceneParseError(f"{path}: expected [xmin, ymin, xmax, ymax]")
    try:
        return Rect(*(_num(c, f"{path}[{i}]") for i, c in enumerate(v)))
    except ValueError as e:
        raise SceneParseError(f"{path}: {e}") from e


def _parse_shape(v, path) -> ConvexShape:
    kind = _need(v, "kind", path)
    try:
        if kind == "disk":
            return Disk(_num(_need(v, "r", path), f"{path}.r"))
        if kind == "box":
            return Box(_num(_need(v, "hx", path), f"{path}.hx"),
                       _num(_need(v, "hy", path), f"{path}.hy"))
    except ValueError as e:
        raise SceneParseError(f"{path}: {e}") from e
    raise SceneParseError(f"{path}.kind: expected disk or box, got {kind!r}")


def _parse_pose(v, path) -> Pose2:
    if not (isinstance(v, list) and len(v) == 3):
        raise SceneParseError(f"{path}: expected [x, y, theta]")
    try:
        return Pose2(*(_num(c, f"{path}[{i}]") for i, c in enumerate(v)))
    except ValueError as e:
        raise SceneParseError(f"{path}: {e}") from e


def _parse_body(v, i) -> BodySpec:
    path = f"bodies[{i}]"
    role = _need(v, "role", path)
    if role not in _ROLES:
        raise SceneParseError(
            f"{path}.role: expected one of {'|'.join(_ROLES)}, got {role!r}")
    body_id = _need(v, "id", path)
    if not isinstance(body_id, str) or not body_id:
        raise SceneParseError(f"{path}.id: expected a non-empty string")
    return BodySpec(
        id=body_id,
        role=role,
        shape=_parse_shape(_need(v, "shape", path), f"{path}.shape"),
        pose=_parse_pose(_need(v, "pose", path), f"{path}.pose"),
    )


def parse_scene(text: str) -> Scene:
    """Parse the versioned scene format, with field-path diagnostics."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise SceneParseError(f"malformed document: {e}") from e
    if not isinstance(doc, dict):
        raise SceneParseError("document root: expected a mapping")
    version = _need(doc, "version", "document")
    if version != SCENE_FORMAT_VERSION:
        raise SceneParseError(
            f"version: unsupported {version!r}, expected {SCENE_FORMAT_VERSION}")
    ph_doc = _need(doc, "physics", "document")
    try:
        physics = Physics(**{k: _num(_need(ph_doc, k, "physics"), f"physics.{k}")
                             for k in ("dt", "tol_pen", "kappa", "v_max",
                                       "omega_max", "d_max")})
    except ValueError as e:
        raise SceneParseError(f"physics: {e}") from e
    bodies_doc = _need(doc, "bodies", "document")
    if not isinstance(bodies_doc, list):
        raise SceneParseError("bodies: expected a list")
    bodies = tuple(_parse_body(b, i) for i, b in enumerate(bodies_doc))
    name = _need(doc, "name", "document")
    if not isinstance(name, str):
        raise SceneParseError("name: expected a string")
    seed = _need(doc, "seed", "document")
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise SceneParseError(f"seed: expected an integer, got {seed!r}")
    try:
        return Scene(
            name=name,
            bodies=bodies,
            workspace=_rect(_need(doc, "workspace", "document"), "workspace"),
            pocket=_rect(_need(doc, "pocket", "document"), "pocket"),
            region_diameter=_num(_need(doc, "region_diameter", "document"),
                                 "region_diameter"),
            physics=physics,
            seed=seed,
        )
    except SceneValidationError as e:
        raise SceneParseError(str(e)) from e


def load_scene(path) -> Scene:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scene(fh.read())


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_scene(scene))
