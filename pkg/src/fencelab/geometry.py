"""Scalar 3-D geometry for the game hot path.

Vectors are plain ``(x, y, z)`` float tuples: the per-tick game loop runs
millions of times in the test suite and numpy's small-array overhead is an
order of magnitude worse than unpacked float arithmetic here.
"""

from __future__ import annotations

import math

Vec3 = tuple[float, float, float]

ZERO: Vec3 = (0.0, 0.0, 0.0)

_EPS_PARALLEL = 1e-14
_EPS_DEGENERATE = 1e-12


def add(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def sub(a: Vec3, b: Vec3) -> Vec3:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def scale(a: Vec3, k: float) -> Vec3:
    return (a[0] * k, a[1] * k, a[2] * k)


def dot(a: Vec3, b: Vec3) -> float:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def cross(a: Vec3, b: Vec3) -> Vec3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def norm(a: Vec3) -> float:
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def dist(a: Vec3, b: Vec3) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    dz = a[2] - b[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def normalize(a: Vec3) -> Vec3:
    n = norm(a)
    if n < _EPS_DEGENERATE:
        raise ValueError(f"cannot normalize near-zero vector {a}")
    inv = 1.0 / n
    return (a[0] * inv, a[1] * inv, a[2] * inv)


def clamp_norm(a: Vec3, max_norm: float) -> Vec3:
    """Rescale ``a`` so its Euclidean norm does not exceed ``max_norm``."""
    n = norm(a)
    if n <= max_norm:
        return a
    k = max_norm / n
    return (a[0] * k, a[1] * k, a[2] * k)


def is_finite(a: Vec3) -> bool:
    return math.isfinite(a[0]) and math.isfinite(a[1]) and math.isfinite(a[2])


def rotate_about_axis(v: Vec3, axis_unit: Vec3, angle: float) -> Vec3:
    """Rodrigues rotation of ``v`` about the unit axis by ``angle`` radians."""
    c = math.cos(angle)
    s = math.sin(angle)
    k = axis_unit
    kv = cross(k, v)
    kd = dot(k, v) * (1.0 - c)
    return (
        v[0] * c + kv[0] * s + k[0] * kd,
        v[1] * c + kv[1] * s + k[1] * kd,
        v[2] * c + kv[2] * s + k[2] * kd,
    )


def rotate_by_rotvec(v: Vec3, rotvec: Vec3) -> Vec3:
    """Rotate ``v`` by an axis-scaled rotation vector (angle = its norm)."""
    angle = norm(rotvec)
    if angle < _EPS_DEGENERATE:
        return v
    inv = 1.0 / angle
    return rotate_about_axis(v, (rotvec[0] * inv, rotvec[1] * inv, rotvec[2] * inv), angle)


def rotvec_between(a: Vec3, b: Vec3) -> Vec3:
    """Minimal rotation vector taking unit vector ``a`` onto unit vector ``b``."""
    c = cross(a, b)
    s = norm(c)
    d = dot(a, b)
    angle = math.atan2(s, d)
    if s < _EPS_DEGENERATE:
        if d > 0.0:
            return ZERO
        # antiparallel: rotate by pi about any axis orthogonal to a
        return scale(perpendicular_unit(a), math.pi)
    return scale(c, angle / s)


def perpendicular_unit(a: Vec3) -> Vec3:
    """A deterministic unit vector orthogonal to ``a`` (need not be unit)."""
    # pick the reference axis least aligned with a to avoid degeneracy
    ax, ay, az = abs(a[0]), abs(a[1]), abs(a[2])
    if az <= ax and az <= ay:
        ref: Vec3 = (0.0, 0.0, 1.0)
    elif ay <= ax:
        ref = (0.0, 1.0, 0.0)
    else:
        ref = (1.0, 0.0, 0.0)
    return normalize(cross(a, ref))


def point_segment_distance(p: Vec3, s0: Vec3, s1: Vec3) -> float:
    """Distance from point ``p`` to the closed segment [s0, s1]."""
    ux = s1[0] - s0[0]
    uy = s1[1] - s0[1]
    uz = s1[2] - s0[2]
    wx = p[0] - s0[0]
    wy = p[1] - s0[1]
    wz = p[2] - s0[2]
    uu = ux * ux + uy * uy + uz * uz
    if uu < _EPS_DEGENERATE * _EPS_DEGENERATE:
        raise ValueError("degenerate zero-length segment")
    t = (ux * wx + uy * wy + uz * wz) / uu
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    dx = wx - t * ux
    dy = wy - t * uy
    dz = wz - t * uz
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def closest_point_on_segment(p: Vec3, s0: Vec3, s1: Vec3) -> Vec3:
    """Point of the closed segment [s0, s1] nearest to ``p``."""
    ux = s1[0] - s0[0]
    uy = s1[1] - s0[1]
    uz = s1[2] - s0[2]
    uu = ux * ux + uy * uy + uz * uz
    if uu < _EPS_DEGENERATE * _EPS_DEGENERATE:
        raise ValueError("degenerate zero-length segment")
    t = ((p[0] - s0[0]) * ux + (p[1] - s0[1]) * uy + (p[2] - s0[2]) * uz) / uu
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return (s0[0] + t * ux, s0[1] + t * uy, s0[2] + t * uz)


def segment_sphere_intersects(seg_start: Vec3, seg_end: Vec3, center: Vec3, radius: float) -> bool:
    """True iff the closed segment comes within ``radius`` of ``center`` (boundary inclusive)."""
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    return point_segment_distance(center, seg_start, seg_end) <= radius


def segment_segment_distance(a0: Vec3, a1: Vec3, b0: Vec3, b1: Vec3) -> float:
    """Minimum Euclidean distance between the closed segments [a0,a1] and [b0,b1].

    Clamped closest-point computation (Ericson, Real-Time Collision Detection
    ch. 5.1.9), specialised to non-degenerate segments.
    """
    ux = a1[0] - a0[0]
    uy = a1[1] - a0[1]
    uz = a1[2] - a0[2]
    vx = b1[0] - b0[0]
    vy = b1[1] - b0[1]
    vz = b1[2] - b0[2]
    wx = a0[0] - b0[0]
    wy = a0[1] - b0[1]
    wz = a0[2] - b0[2]
    a = ux * ux + uy * uy + uz * uz
    c = vx * vx + vy * vy + vz * vz
    if a < _EPS_DEGENERATE * _EPS_DEGENERATE or c < _EPS_DEGENERATE * _EPS_DEGENERATE:
        raise ValueError("degenerate zero-length segment")
    b = ux * vx + uy * vy + uz * vz
    d = ux * wx + uy * wy + uz * wz
    e = vx * wx + vy * wy + vz * wz
    denom = a * c - b * b

    if denom > _EPS_PARALLEL:
        s = (b * e - c * d) / denom
        s = 0.0 if s < 0.0 else (1.0 if s > 1.0 else s)
    else:
        s = 0.0
    t = (b * s + e) / c
    if t < 0.0:
        t = 0.0
        s = -d / a
        s = 0.0 if s < 0.0 else (1.0 if s > 1.0 else s)
    elif t > 1.0:
        t = 1.0
        s = (b - d) / a
        s = 0.0 if s < 0.0 else (1.0 if s > 1.0 else s)

    dx = (a0[0] + s * ux) - (b0[0] + t * vx)
    dy = (a0[1] + s * uy) - (b0[1] + t * vy)
    dz = (a0[2] + s * uz) - (b0[2] + t * vz)
    return math.sqrt(dx * dx + dy * dy + dz * dz)
