"""Small quaternion and vector helpers (scalar-first w,x,y,z convention)."""

from __future__ import annotations

import math

import numpy as np

IDENTITY_QUAT = (1.0, 0.0, 0.0, 0.0)


def quat_norm(q) -> float:
    w, x, y, z = q
    return math.sqrt(w * w + x * x + y * y + z * z)


def quat_normalize(q) -> tuple[float, float, float, float]:
    n = quat_norm(q)
    if n == 0.0:
        raise ValueError("zero quaternion")
    w, x, y, z = q
    return (w / n, x / n, y / n, z / n)


def quat_mul(a, b) -> tuple[float, float, float, float]:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_rotate(q, v) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion."""
    w, x, y, z = q
    u = np.array([x, y, z], dtype=float)
    v = np.asarray(v, dtype=float)
    # v' = v + 2 u x (u x v + w v)
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)


def quat_from_axis_angle(axis, angle_rad: float) -> tuple[float, float, float, float]:
    ax = np.asarray(axis, dtype=float)
    n = np.linalg.norm(ax)
    if n == 0.0:
        raise ValueError("zero rotation axis")
    ax = ax / n
    half = 0.5 * angle_rad
    s = math.sin(half)
    return (math.cos(half), ax[0] * s, ax[1] * s, ax[2] * s)


def quat_align_z(direction) -> tuple[float, float, float, float]:
    """Quaternion mapping the +z axis onto ``direction`` (any nonzero vector)."""
    d = np.asarray(direction, dtype=float)
    n = np.linalg.norm(d)
    if n == 0.0:
        raise ValueError("zero direction")
    d = d / n
    z = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(z, d))
    if c > 1.0 - 1e-12:
        return IDENTITY_QUAT
    if c < -1.0 + 1e-12:
        return quat_from_axis_angle([1.0, 0.0, 0.0], math.pi)
    axis = np.cross(z, d)
    return quat_from_axis_angle(axis, math.acos(max(-1.0, min(1.0, c))))


def angle_between(u, v) -> float:
    """Angle in radians between two nonzero vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("zero-length vector")
    c = float(np.dot(u, v) / (nu * nv))
    return math.acos(max(-1.0, min(1.0, c)))
