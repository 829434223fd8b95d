"""Field-of-view geometry: sightline clearance, occlusion tests, overlap volume.

The camera footprint of an auxiliary UAV looking at the main UAV is modeled as
a solid circular cone with its apex at the observer, its axis through the
target, and (by default) truncated at the plane through the target orthogonal
to the axis.  All obstacle reasoning happens against spheres.

The per-obstacle construction used by the avoidance task works in the plane
through the point of the sightline segment closest to the obstacle center:

    p1  closest point of segment [observer, target] to the obstacle center
    p2  point of the cone lateral surface at p1's axial station, towards the
        obstacle
    p3  point of the obstacle surface closest to p1 along the same direction

Signed distances along that direction classify the configuration:

    CLEAR    cone radius + margin < distance to sphere   (nothing to do)
    NEAR     sphere inside the safety margin but not touching the cone
    BLOCKED  sphere reaches the cone surface at p1's station

and the scalar error driven to zero by the avoidance task is

    e3 = (signed sphere distance - cone radius) - margin

which is continuous across all three regimes and stays monotone even when the
sightline itself pierces the obstacle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

AXIS_EPS = 1e-9


class DegenerateSegment(ValueError):
    """Observer and target coincide; no sightline exists."""


class AxialObstacle(ValueError):
    """Obstacle center sits on the sightline; the offset direction is undefined."""


class LosCase(IntEnum):
    CLEAR = 1
    NEAR = 2
    BLOCKED = 3


@dataclass(frozen=True)
class ViewCone:
    """Solid circular viewing cone.

    apex_angle is the full opening angle; ``finite`` truncates the cone at the
    plane through the target orthogonal to the axis, otherwise it extends as
    an infinite ray cone.
    """

    apex: np.ndarray
    target: np.ndarray
    apex_angle: float
    finite: bool = True

    def __post_init__(self):
        object.__setattr__(self, "apex", np.asarray(self.apex, dtype=float))
        object.__setattr__(self, "target", np.asarray(self.target, dtype=float))
        if not (0.0 < self.apex_angle < math.pi):
            raise ValueError(f"apex_angle must be in (0, pi), got {self.apex_angle}")
        if np.linalg.norm(self.target - self.apex) == 0.0:
            raise DegenerateSegment("cone apex and target coincide")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.target - self.apex))

    @property
    def axis(self) -> np.ndarray:
        d = self.target - self.apex
        return d / np.linalg.norm(d)


@dataclass(frozen=True)
class LosGeometry:
    """Result of the per-obstacle sightline construction (see module docstring)."""

    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray
    e3: float
    case: LosCase


def closest_point_on_segment(a: np.ndarray, b: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Closest point of segment [a, b] to ``point``.

    Raises DegenerateSegment when a == b.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(np.dot(ab, ab))
    if denom == 0.0:
        raise DegenerateSegment("segment endpoints coincide")
    t = float(np.dot(np.asarray(point, dtype=float) - a, ab)) / denom
    return a + min(max(t, 0.0), 1.0) * ab


def los_clearance(aux: np.ndarray, main: np.ndarray, center: np.ndarray,
                  radius: float, apex_angle: float) -> float:
    """Signed gap between the obstacle sphere and the cone surface at p1's station.

    Positive: the sphere stays clear of the cone by that much (measured in the
    plane through p1).  Negative: penetration depth.  Raises AxialObstacle when
    the obstacle center lies on the sightline (offset direction undefined).
    """
    aux = np.asarray(aux, dtype=float)
    main = np.asarray(main, dtype=float)
    center = np.asarray(center, dtype=float)
    p1 = closest_point_on_segment(aux, main, center)
    offset = center - p1
    rho = float(np.linalg.norm(offset))
    if rho < AXIS_EPS:
        raise AxialObstacle(f"obstacle center within {AXIS_EPS} of the sightline")
    cone_radius = float(np.linalg.norm(p1 - aux)) * math.tan(apex_angle / 2.0)
    return (rho - radius) - cone_radius


def los_geometry(aux: np.ndarray, main: np.ndarray, center: np.ndarray,
                 radius: float, apex_angle: float, margin: float) -> LosGeometry:
    """Construct p1/p2/p3, classify the configuration, and evaluate e3."""
    aux = np.asarray(aux, dtype=float)
    main = np.asarray(main, dtype=float)
    center = np.asarray(center, dtype=float)
    p1 = closest_point_on_segment(aux, main, center)
    offset = center - p1
    rho = float(np.linalg.norm(offset))
    if rho < AXIS_EPS:
        raise AxialObstacle(f"obstacle center within {AXIS_EPS} of the sightline")
    d = offset / rho
    cone_radius = float(np.linalg.norm(p1 - aux)) * math.tan(apex_angle / 2.0)
    sphere_gap = rho - radius  # signed distance from p1 to the sphere surface along d
    p2 = p1 + d * cone_radius
    p3 = center - d * radius

    if cone_radius + margin < sphere_gap:
        case = LosCase.CLEAR
    elif cone_radius > sphere_gap:
        case = LosCase.BLOCKED
    else:
        case = LosCase.NEAR
    e3 = (sphere_gap - cone_radius) - margin
    return LosGeometry(p1=p1, p2=p2, p3=p3, e3=e3, case=case)


def e3_error(geom: LosGeometry, margin: float) -> float:
    """Avoidance error from a stored construction.

    Equals ||p3 - p2|| - margin while the sphere is clear of the cone and
    -||p3 - p2|| - margin once it penetrates (so the error keeps decreasing
    with penetration depth instead of folding back).
    """
    gap = float(np.linalg.norm(geom.p3 - geom.p2))
    if geom.case is LosCase.BLOCKED:
        return -gap - margin
    return gap - margin


def _point_segment_distance_2d(px: float, py: float, ax: float, ay: float,
                               bx: float, by: float) -> float:
    abx, aby = bx - ax, by - ay
    denom = abx * abx + aby * aby
    t = 0.0 if denom == 0.0 else ((px - ax) * abx + (py - ay) * aby) / denom
    t = min(max(t, 0.0), 1.0)
    dx, dy = px - (ax + t * abx), py - (ay + t * aby)
    return math.hypot(dx, dy)


def cone_point_distance(cone: ViewCone, point: np.ndarray) -> float:
    """Exact Euclidean distance from ``point`` to the solid cone (0 inside).

    Works in the (axial, radial) half-plane: the solid of revolution reduces
    to a triangle (finite cone) or wedge (infinite cone), and for any point
    the 3d minimizer shares its azimuth, so the 2d distance is exact.
    """
    apex = cone.apex
    axis = cone.axis
    rel = np.asarray(point, dtype=float) - apex
    t = float(np.dot(rel, axis))
    rho = float(np.linalg.norm(rel - t * axis))
    slope = math.tan(cone.apex_angle / 2.0)

    if cone.finite:
        length = cone.length
        if 0.0 <= t <= length and rho <= t * slope:
            return 0.0
        rim_r = length * slope
        return min(
            _point_segment_distance_2d(t, rho, 0.0, 0.0, length, rim_r),
            _point_segment_distance_2d(t, rho, length, 0.0, length, rim_r),
        )
    if t >= 0.0 and rho <= t * slope:
        return 0.0
    # distance to the slant ray from the apex
    ux, uy = math.cos(math.atan(slope)), math.sin(math.atan(slope))
    proj = max(t * ux + rho * uy, 0.0)
    return math.hypot(t - proj * ux, rho - proj * uy)


def cone_sphere_margin(cone: ViewCone, center: np.ndarray, radius: float) -> float:
    """Signed separation between the solid cone and a sphere (<= 0: they touch)."""
    return cone_point_distance(cone, center) - radius


def occludes(cone: ViewCone, center: np.ndarray, radius: float) -> bool:
    """True iff the solid cone and the solid sphere intersect (tangency counts)."""
    return cone_sphere_margin(cone, center, radius) <= 0.0


def fov_obstacle_intersection_volume(cone: ViewCone, center: np.ndarray,
                                     radius: float, resolution: float = 20.0) -> float:
    """Voxel estimate of the cone-sphere overlap volume in m^3.

    The sphere's bounding box is voxelized at ``resolution`` cells per meter
    and voxel centers are tested for membership in both solids.  The grid
    lives in a frame derived from the cone axis and the obstacle offset, so
    the estimate is invariant under rigid motion of the whole configuration
    and exactly zero for disjoint solids.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    center = np.asarray(center, dtype=float)
    axis = cone.axis
    rel = center - cone.apex
    t_c = float(np.dot(rel, axis))
    perp = rel - t_c * axis
    rho_c = float(np.linalg.norm(perp))

    h = 1.0 / float(resolution)
    n = max(int(math.ceil(2.0 * radius / h)), 1)
    # voxel centers for one axis of the sphere bounding box, in sphere coords
    lin = -radius + (np.arange(n) + 0.5) * h
    gx, gy, gz = np.meshgrid(lin, lin, lin, indexing="ij")
    inside_sphere = gx * gx + gy * gy + gz * gz <= radius * radius

    # cone-frame coordinates: x along the axis, y towards the sphere center
    t = t_c + gx
    y = rho_c + gy
    rho_sq = y * y + gz * gz
    slope = math.tan(cone.apex_angle / 2.0)
    inside_cone = (t >= 0.0) & (rho_sq <= np.square(t * slope))
    if cone.finite:
        inside_cone &= t <= cone.length

    return float(np.count_nonzero(inside_sphere & inside_cone)) * h ** 3
