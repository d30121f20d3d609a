"""Rigid-transform and quaternion algebra.

Quaternions are (w, x, y, z) everywhere: in memory, in file formats, and on
the wire.  Poses pair a position in meters with a unit quaternion.  All
functions are pure and operate on plain tuples, which keeps the per-call cost
low enough for the simulation inner loop and makes results bit-reproducible
across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class Pose:
    """Rigid transform: position (m) + unit quaternion (w, x, y, z)."""

    position: Vec3 = (0.0, 0.0, 0.0)
    orientation: Quat = IDENTITY_QUAT

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    def validate(self) -> None:
        if not all(math.isfinite(c) for c in self.position):
            raise ValueError(f"non-finite position {self.position}")
        n = math.sqrt(sum(c * c for c in self.orientation))
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"orientation norm {n} deviates from 1")


def quat_normalize(q: Sequence[float]) -> Quat:
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise ValueError("cannot normalize zero quaternion")
    return (w / n, x / n, y / n, z / n)


def quat_multiply(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_conjugate(q: Quat) -> Quat:
    return (q[0], -q[1], -q[2], -q[3])


def quat_rotate(q: Quat, v: Sequence[float]) -> Vec3:
    """Rotate vector v by unit quaternion q (q v q*)."""
    w, x, y, z = q
    vx, vy, vz = v
    # t = 2 * (q_vec x v); v' = v + w*t + q_vec x t
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


def quat_from_axis_angle(axis: Sequence[float], angle: float) -> Quat:
    ax, ay, az = axis
    n = math.sqrt(ax * ax + ay * ay + az * az)
    if n == 0.0:
        raise ValueError("zero rotation axis")
    half = 0.5 * angle
    s = math.sin(half) / n
    return (math.cos(half), ax * s, ay * s, az * s)


def quat_to_rotvec(q: Quat) -> Vec3:
    """Axis-angle (rotation vector) of a unit quaternion, angle in [0, pi]."""
    w, x, y, z = q
    if w < 0.0:
        w, x, y, z = -w, -x, -y, -z
    vn = math.sqrt(x * x + y * y + z * z)
    if vn < 1e-12:
        return (2.0 * x, 2.0 * y, 2.0 * z)
    angle = 2.0 * math.atan2(vn, w)
    s = angle / vn
    return (x * s, y * s, z * s)


def quat_from_rotvec(v: Sequence[float]) -> Quat:
    vx, vy, vz = v
    angle = math.sqrt(vx * vx + vy * vy + vz * vz)
    if angle < 1e-12:
        return quat_normalize((1.0, 0.5 * vx, 0.5 * vy, 0.5 * vz))
    half = 0.5 * angle
    s = math.sin(half) / angle
    return (math.cos(half), vx * s, vy * s, vz * s)


def rot_z(angle: float) -> Quat:
    return (math.cos(0.5 * angle), 0.0, 0.0, math.sin(0.5 * angle))


def quat_to_matrix(q: Quat) -> tuple[Vec3, Vec3, Vec3]:
    """3x3 rotation matrix as rows; columns are the rotated basis vectors."""
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return (
        (1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)),
        (2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)),
        (2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)),
    )


def quat_from_matrix(m: Sequence[Sequence[float]]) -> Quat:
    """Unit quaternion from a rotation matrix (rows), Shepperd's method."""
    m00, m01, m02 = m[0]
    m10, m11, m12 = m[1]
    m20, m21, m22 = m[2]
    tr = m00 + m11 + m22
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        q = (0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s)
    elif m00 > m11 and m00 > m22:
        s = math.sqrt(1.0 + m00 - m11 - m22) * 2.0
        q = ((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s)
    elif m11 > m22:
        s = math.sqrt(1.0 + m11 - m00 - m22) * 2.0
        q = ((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s)
    else:
        s = math.sqrt(1.0 + m22 - m00 - m11) * 2.0
        q = ((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s)
    return quat_normalize(q)


def geodesic_angle(q1: Quat, q2: Quat) -> float:
    """Minimal rotation angle between two orientations, in [0, pi].

    Invariant under sign flips of either quaternion (q and -q encode the
    same rotation).
    """
    r = quat_multiply(quat_conjugate(q1), q2)
    w, x, y, z = r
    vn = math.sqrt(x * x + y * y + z * z)
    return 2.0 * math.atan2(vn, abs(w))


def average_quaternions(qs: Iterable[Quat]) -> Quat:
    """Sign-aligned component-wise mean, renormalized.

    Adequate for the few-degree spreads the perception noise model produces
    (callers guarantee pairwise geodesic angles below pi/2 after outlier
    filtering).
    """
    qs = list(qs)
    if not qs:
        raise ValueError("no estimates")
    ref = qs[0]
    sw = sx = sy = sz = 0.0
    for q in qs:
        dot = ref[0] * q[0] + ref[1] * q[1] + ref[2] * q[2] + ref[3] * q[3]
        sign = -1.0 if dot < 0.0 else 1.0
        sw += sign * q[0]
        sx += sign * q[1]
        sy += sign * q[2]
        sz += sign * q[3]
    return quat_normalize((sw, sx, sy, sz))


def slerp(q0: Quat, q1: Quat, t: float) -> Quat:
    """Spherical-linear interpolation along the shorter arc."""
    dot = q0[0] * q1[0] + q0[1] * q1[1] + q0[2] * q1[2] + q0[3] * q1[3]
    if dot < 0.0:
        q1 = (-q1[0], -q1[1], -q1[2], -q1[3])
        dot = -dot
    if dot > 0.9999995:
        mixed = tuple(a + t * (b - a) for a, b in zip(q0, q1))
        return quat_normalize(mixed)
    theta = math.acos(min(1.0, dot))
    s = math.sin(theta)
    w0 = math.sin((1.0 - t) * theta) / s
    w1 = math.sin(t * theta) / s
    return quat_normalize(tuple(w0 * a + w1 * b for a, b in zip(q0, q1)))


def twist_angle(q: Quat, axis: Vec3) -> float:
    """Signed rotation of q about the given unit axis, in (-pi, pi].

    Swing-twist decomposition: the twist factor of q about `axis`.
    """
    d = q[1] * axis[0] + q[2] * axis[1] + q[3] * axis[2]
    a = 2.0 * math.atan2(d, q[0])
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


def yaw_of(q: Quat) -> float:
    """Rotation of q about the world vertical axis, in (-pi, pi]."""
    return twist_angle(q, (0.0, 0.0, 1.0))


def compose_poses(a: Pose, b: Pose) -> Pose:
    """a then b in a's frame (homogeneous-transform product a*b)."""
    px, py, pz = quat_rotate(a.orientation, b.position)
    ax, ay, az = a.position
    return Pose(
        (ax + px, ay + py, az + pz),
        quat_normalize(quat_multiply(a.orientation, b.orientation)),
    )


def inverse_pose(p: Pose) -> Pose:
    qi = quat_conjugate(p.orientation)
    ix, iy, iz = quat_rotate(qi, p.position)
    return Pose((-ix, -iy, -iz), qi)


def relative_pose(a: Pose, b: Pose) -> Pose:
    """b expressed in a's frame (a^-1 * b)."""
    return compose_poses(inverse_pose(a), b)


def translate(x: float, y: float, z: float = 0.0) -> Pose:
    return Pose((x, y, z), IDENTITY_QUAT)


def pose_distance(a: Pose, b: Pose) -> tuple[float, float]:
    """(translation distance, geodesic rotation angle) between two poses."""
    dx = a.position[0] - b.position[0]
    dy = a.position[1] - b.position[1]
    dz = a.position[2] - b.position[2]
    return (
        math.sqrt(dx * dx + dy * dy + dz * dz),
        geodesic_angle(a.orientation, b.orientation),
    )


def pose_to_list(p: Pose) -> list[float]:
    return [*p.position, *p.orientation]


def pose_from_list(v: Sequence[float]) -> Pose:
    if len(v) != 7:
        raise ValueError(f"pose needs 7 numbers, got {len(v)}")
    return Pose((v[0], v[1], v[2]), quat_normalize((v[3], v[4], v[5], v[6])))
