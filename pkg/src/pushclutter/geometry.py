"""SE(2) poses, convex shapes, overlap queries, and swept corridors.

All lengths are meters, all angles radians. Narrow-phase contact math is
delegated to the selected kernel backend so that geometric predicates used
by generators and strategies agree bit-for-bit with the physics.
"""

import math
from dataclasses import dataclass
from typing import Optional, Union

from . import kernels

_TWO_PI = 2.0 * math.pi

# number of sides of the polygon that stands in for a disk in hull math
DISK_SEGMENTS = 16


def normalize_angle(a: float) -> float:
    """Reduce an angle to the half-open interval (-pi, pi]."""
    if not math.isfinite(a):
        raise ValueError(f"angle must be finite, got {a!r}")
    r = math.fmod(a, _TWO_PI)
    if r > math.pi:
        r -= _TWO_PI
    elif r <= -math.pi:
        r += _TWO_PI
    return r


@dataclass(frozen=True)
class Pose2:
    """A planar pose. theta is normalized at construction."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"pose coordinates must be finite, got ({self.x!r}, {self.y!r})")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def local_to_world(self, lx: float, ly: float) -> tuple:
        c = math.cos(self.theta)
        s = math.sin(self.theta)
        return (self.x + c * lx - s * ly, self.y + s * lx + c * ly)

    def world_to_local(self, wx: float, wy: float) -> tuple:
        c = math.cos(self.theta)
        s = math.sin(self.theta)
        dx = wx - self.x
        dy = wy - self.y
        return (c * dx + s * dy, -s * dx + c * dy)


@dataclass(frozen=True)
class Disk:
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise ValueError(f"disk radius must be positive, got {self.radius!r}")


@dataclass(frozen=True)
class Box:
    half_extent_x: float
    half_extent_y: float

    def __post_init__(self):
        ok = (math.isfinite(self.half_extent_x) and self.half_extent_x > 0.0
              and math.isfinite(self.half_extent_y) and self.half_extent_y > 0.0)
        if not ok:
            raise ValueError(
                f"box half extents must be positive, got "
                f"({self.half_extent_x!r}, {self.half_extent_y!r})")


ConvexShape = Union[Disk, Box]


@dataclass(frozen=True)
class Contact:
    """Overlap witness: depth is the minimum translation distance and the
    normal points from shape a to shape b; translating b by depth*normal
    separates the pair."""

    depth: float
    normal: tuple
    point: tuple


@dataclass(frozen=True)
class Corridor:
    """Swept footprint of a shape along a straight motion."""

    footprint_samples: tuple  # of (ConvexShape, Pose2)
    hull: tuple               # convex polygon vertices, CCW


def shape_params(shape: ConvexShape) -> tuple:
    """Kernel encoding (type code, p0, p1) of a shape."""
    if isinstance(shape, Disk):
        return (kernels.DISK, shape.radius, 0.0)
    if isinstance(shape, Box):
        return (kernels.BOX, shape.half_extent_x, shape.half_extent_y)
    raise TypeError(f"not a convex shape: {shape!r}")


def circumradius(shape: ConvexShape) -> float:
    if isinstance(shape, Disk):
        return shape.radius
    return math.sqrt(shape.half_extent_x * shape.half_extent_x
                     + shape.half_extent_y * shape.half_extent_y)


def min_enclosing_circle(shape: ConvexShape, pose: Pose2) -> tuple:
    """((x, y), radius) of the smallest circle containing the posed shape."""
    return ((pose.x, pose.y), circumradius(shape))


def overlap(a: ConvexShape, pa: Pose2, b: ConvexShape, pb: Pose2) -> Optional[Contact]:
    """Contact between two posed shapes, or None if interiors are disjoint."""
    ta, ap0, ap1 = shape_params(a)
    tb, bp0, bp1 = shape_params(b)
    r = kernels.contact(ta, pa.x, pa.y, pa.theta, ap0, ap1,
                        tb, pb.x, pb.y, pb.theta, bp0, bp1)
    if r is None:
        return None
    depth, nx, ny, px, py = r
    return Contact(depth=depth, normal=(nx, ny), point=(px, py))


def se2_distance(a: Pose2, b: Pose2, w_rot: float = 0.25) -> float:
    """Translation distance plus w_rot-weighted absolute angular difference."""
    if w_rot < 0.0:
        raise ValueError(f"w_rot must be non-negative, got {w_rot!r}")
    dx = b.x - a.x
    dy = b.y - a.y
    return math.sqrt(dx * dx + dy * dy) + w_rot * abs(normalize_angle(a.theta - b.theta))


def shape_vertices(shape: ConvexShape, pose: Pose2) -> list:
    """World-frame vertices of the shape; disks become circumscribed
    regular 16-gons so containment stays conservative."""
    if isinstance(shape, Box):
        hx = shape.half_extent_x
        hy = shape.half_extent_y
        return [pose.local_to_world(sx * hx, sy * hy)
                for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1))]
    rr = shape.radius / math.cos(math.pi / DISK_SEGMENTS)
    out = []
    for k in range(DISK_SEGMENTS):
        ang = pose.theta + _TWO_PI * k / DISK_SEGMENTS
        out.append((pose.x + rr * math.cos(ang), pose.y + rr * math.sin(ang)))
    return out


def convex_hull(points) -> list:
    """Convex hull (Andrew's monotone chain), CCW, no duplicate endpoint."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) <= 2:
        return pts

    def cross(o, p, q):
        return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0.0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0.0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def polygon_area(poly) -> float:
    """Signed shoelace area; positive for CCW vertex order."""
    n = len(poly)
    s = 0.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def polygon_contains(poly, x: float, y: float, margin: float = 0.0) -> bool:
    """Point-in-convex-polygon for CCW polygons. A positive margin widens
    the polygon (near-boundary points count as inside)."""
    n = len(poly)
    if n == 0:
        return False
    if n == 1:
        px, py = poly[0]
        dx = x - px
        dy = y - py
        return dx * dx + dy * dy <= margin * margin
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        ex = x1 - x0
        ey = y1 - y0
        elen = math.sqrt(ex * ex + ey * ey)
        if elen == 0.0:
            continue
        # inside is to the left of each edge
        if (ex * (y - y0) - ey * (x - x0)) / elen < -margin:
            return False
    return True


def _project(poly, ux: float, uy: float) -> tuple:
    lo = hi = poly[0][0] * ux + poly[0][1] * uy
    for px, py in poly[1:]:
        d = px * ux + py * uy
        if d < lo:
            lo = d
        elif d > hi:
            hi = d
    return lo, hi


def convex_polygons_intersect(p1, p2, margin: float = 0.0) -> bool:
    """SAT intersection test for convex polygons. A positive margin treats
    gaps narrower than margin as intersecting (conservative)."""
    for poly in (p1, p2):
        n = len(poly)
        for i in range(n):
            x0, y0 = poly[i]
            x1, y1 = poly[(i + 1) % n]
            ex = x1 - x0
            ey = y1 - y0
            elen = math.sqrt(ex * ex + ey * ey)
            if elen == 0.0:
                continue
            ux = -ey / elen
            uy = ex / elen
            lo1, hi1 = _project(p1, ux, uy)
            lo2, hi2 = _project(p2, ux, uy)
            # separated only when the gap exceeds the margin
            if lo2 - hi1 > margin or lo1 - hi2 > margin:
                return False
    return True


def shape_outside_polygon(shape: ConvexShape, pose: Pose2, poly,
                          margin: float = 1e-6) -> bool:
    """True when the posed shape is strictly clear of the convex polygon
    (disks via their circumscribed 16-gon, so the test is conservative)."""
    if not poly:
        return True
    return not convex_polygons_intersect(shape_vertices(shape, pose), poly, margin)


def point_to_shape_distance(shape: ConvexShape, pose: Pose2, x: float, y: float) -> float:
    """Distance from a point to the shape's boundary; 0.0 inside."""
    if isinstance(shape, Disk):
        dx = x - pose.x
        dy = y - pose.y
        return max(0.0, math.sqrt(dx * dx + dy * dy) - shape.radius)
    lx, ly = pose.world_to_local(x, y)
    qx = min(max(lx, -shape.half_extent_x), shape.half_extent_x)
    qy = min(max(ly, -shape.half_extent_y), shape.half_extent_y)
    dx = lx - qx
    dy = ly - qy
    return math.sqrt(dx * dx + dy * dy)


def swept_corridor(shape: ConvexShape, start: Pose2, end: Pose2, step: float) -> Corridor:
    """Corridor covered by the shape translated from start to end.

    Footprints are sampled no farther than `step` apart along the segment,
    heading held at start.theta; endpoints always included.
    """
    if not (step > 0.0):
        raise ValueError(f"step must be positive, got {step!r}")
    dx = end.x - start.x
    dy = end.y - start.y
    dist = math.sqrt(dx * dx + dy * dy)
    n = max(1, math.ceil(dist / step))
    samples = []
    for i in range(n + 1):
        t = i / n
        samples.append((shape, Pose2(start.x + t * dx, start.y + t * dy, start.theta)))
    pts = []
    for shp, pose in samples:
        pts.extend(shape_vertices(shp, pose))
    return Corridor(footprint_samples=tuple(samples), hull=tuple(convex_hull(pts)))
