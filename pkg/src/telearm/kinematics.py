"""DH chain model, forward kinematics, and 4xN task Jacobians.

Standard (distal) DH convention throughout:

    Transform(theta, d, a, alpha) = RotZ(theta) TransZ(d) TransX(a) RotX(alpha)

with joint variable theta_i = q_i + theta_off_i.  Poses are carried as a
unit quaternion ``r`` plus a pure quaternion ``t`` (meters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mathcore as mc
from .mathcore import Quaternion, UnitQuaternion


@dataclass(frozen=True)
class DHRow:
    theta_off: float  # rad
    d: float          # m
    a: float          # m
    alpha: float      # rad


@dataclass(frozen=True)
class Pose:
    r: UnitQuaternion
    t: Quaternion  # pure, meters

    def __post_init__(self):
        if abs(self.r.norm() - 1.0) > mc.UNIT_RENORM_TOL:
            raise ValueError("pose rotation must be unit")
        if not self.t.is_pure(1e-12):
            raise ValueError("pose translation must be pure")


@dataclass(frozen=True)
class DHChain:
    """A serial chain of revolute joints with box joint limits."""

    rows: tuple[DHRow, ...]
    q_min: np.ndarray = field(default=None)  # type: ignore[assignment]
    q_max: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        n = len(self.rows)
        q_min = self.q_min if self.q_min is not None else np.full(n, -math.pi / 2)
        q_max = self.q_max if self.q_max is not None else np.full(n, math.pi / 2)
        q_min = np.asarray(q_min, dtype=float)
        q_max = np.asarray(q_max, dtype=float)
        if q_min.shape != (n,) or q_max.shape != (n,):
            raise ValueError("joint limit dimension mismatch")
        if not np.all(q_min < q_max):
            raise ValueError("q_min must be elementwise below q_max")
        object.__setattr__(self, "q_min", q_min)
        object.__setattr__(self, "q_max", q_max)

    def __len__(self):
        return len(self.rows)

    def clamp(self, q) -> np.ndarray:
        return np.clip(np.asarray(q, dtype=float), self.q_min, self.q_max)


def umirobot_chain() -> DHChain:
    """The 5-DoF desk arm this package targets, joints limited to +/- pi/2."""
    pi = math.pi
    rows = (
        DHRow(0.0, 0.00245, 0.0, -pi / 2),
        DHRow(-pi / 2, 0.0, 0.0813, pi),
        DHRow(0.0, 0.0, 0.0, pi / 2),
        DHRow(0.0, 0.16519, 0.0, -pi / 2),
        DHRow(0.0, 0.0, 0.0, pi / 2),
    )
    return DHChain(rows)


def _link_pose(row: DHRow, q_i: float) -> Pose:
    """Pose of frame i w.r.t. frame i-1 for joint value q_i."""
    theta = q_i + row.theta_off
    rz = mc.from_axis_angle(mc.K_, theta)
    rx = mc.from_axis_angle(mc.I_, row.alpha)
    r = mc.normalize(mc.mul(rz, rx))
    # t = d*z + RotZ(theta) applied to a*x
    t = Quaternion(0.0,
                   row.a * math.cos(theta),
                   row.a * math.sin(theta),
                   row.d)
    return Pose(r, t)


def _compose(p1: Pose, p2: Pose) -> Pose:
    r = mc.normalize(mc.mul(p1.r, p2.r))
    t = p1.t + mc.rotate(p1.r, p2.t)
    return Pose(r, Quaternion(0.0, t.x, t.y, t.z))


def fkm(chain: DHChain, q, upto: int | None = None) -> Pose:
    """Pose of frame `upto` (default: end effector) w.r.t. the base."""
    q = np.asarray(q, dtype=float)
    if q.shape != (len(chain),):
        raise ValueError(f"expected {len(chain)} joint values, got {q.shape}")
    n = len(chain) if upto is None else upto
    pose = Pose(UnitQuaternion(), Quaternion())
    for i in range(n):
        pose = _compose(pose, _link_pose(chain.rows[i], q[i]))
    return pose


def _joint_frames(chain: DHChain, q):
    """Per-joint rotation axis (base frame) and origin, plus the EE pose."""
    q = np.asarray(q, dtype=float)
    axes = []
    origins = []
    pose = Pose(UnitQuaternion(), Quaternion())
    for i in range(len(chain)):
        # joint i rotates about the z axis of frame i-1
        axes.append(mc.rotate(pose.r, mc.K_))
        origins.append(pose.t)
        pose = _compose(pose, _link_pose(chain.rows[i], q[i]))
    return axes, origins, pose


def rotation_jacobian(chain: DHChain, q) -> np.ndarray:
    """J_r (4xN) with vec4(dr/dt) = J_r @ dq/dt."""
    q = np.asarray(q, dtype=float)
    if q.shape != (len(chain),):
        raise ValueError("dimension mismatch")
    axes, _, pose = _joint_frames(chain, q)
    J = np.zeros((4, len(chain)))
    for i, z in enumerate(axes):
        # dr/dq_i = 1/2 * z_i * r  (spatial angular velocity convention)
        J[:, i] = 0.5 * mc.vec4(mc.mul(z, pose.r))
    return J


def translation_jacobian(chain: DHChain, q) -> np.ndarray:
    """J_t (4xN) with vec4(dt/dt) = J_t @ dq/dt; row 0 is identically zero."""
    q = np.asarray(q, dtype=float)
    if q.shape != (len(chain),):
        raise ValueError("dimension mismatch")
    axes, origins, pose = _joint_frames(chain, q)
    J = np.zeros((4, len(chain)))
    p_e = mc.vec3(pose.t)
    for i, (z, o) in enumerate(zip(axes, origins)):
        J[1:, i] = np.cross(mc.vec3(z), p_e - mc.vec3(o))
    return J


def save_chain(chain: DHChain, path) -> None:
    """Plain-text chain file: one DH row per line, limits on a trailing line."""
    with open(path, "w") as f:
        for row in chain.rows:
            f.write(f"{row.theta_off!r} {row.d!r} {row.a!r} {row.alpha!r}\n")
        f.write("limits " + " ".join(repr(float(v)) for v in chain.q_min)
                + " " + " ".join(repr(float(v)) for v in chain.q_max) + "\n")


def load_chain(path) -> DHChain:
    rows = []
    q_min = q_max = None
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "limits":
                vals = [float(v) for v in parts[1:]]
                if len(vals) != 2 * len(rows):
                    raise ValueError(f"{path}:{lineno}: expected "
                                     f"{2 * len(rows)} limit values")
                q_min = np.array(vals[:len(rows)])
                q_max = np.array(vals[len(rows):])
            else:
                if len(parts) != 4:
                    raise ValueError(f"{path}:{lineno}: expected 4 DH values")
                rows.append(DHRow(*(float(v) for v in parts)))
    if not rows:
        raise ValueError(f"{path}: no DH rows")
    return DHChain(tuple(rows), q_min, q_max)
