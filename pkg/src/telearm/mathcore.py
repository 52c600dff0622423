"""Quaternion algebra and the small dense linear algebra shared by the stack.

Quaternions are stored coefficient-first as (w, x, y, z), so that
``vec4(q) = [w, x, y, z]`` with the scalar part leading.  Matrices and
vectors are plain numpy arrays (row-major); problem sizes never exceed
10x10 anywhere in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNIT_NORM_TOL = 1e-9
# constructors renormalize within this band, reject beyond it
UNIT_RENORM_TOL = 1e-6


@dataclass(frozen=True)
class Quaternion:
    """A real quaternion w + x*i + y*j + z*k."""

    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return mul(self, other)
        return Quaternion(self.w * other, self.x * other,
                          self.y * other, self.z * other)

    def __rmul__(self, scalar):
        return self.__mul__(scalar)

    def __add__(self, other):
        return Quaternion(self.w + other.w, self.x + other.x,
                          self.y + other.y, self.z + other.z)

    def __sub__(self, other):
        return Quaternion(self.w - other.w, self.x - other.x,
                          self.y - other.y, self.z - other.z)

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return math.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2)

    def conj(self) -> "Quaternion":
        return conj(self)

    def is_pure(self, tol: float = UNIT_NORM_TOL) -> bool:
        return abs(self.w) <= tol

    def imag(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


ONE = Quaternion(1.0)
I_ = Quaternion(0.0, 1.0, 0.0, 0.0)
J_ = Quaternion(0.0, 0.0, 1.0, 0.0)
K_ = Quaternion(0.0, 0.0, 0.0, 1.0)


class UnitQuaternion(Quaternion):
    """Quaternion constrained to unit norm (a rotation).

    Inputs within 1e-6 of unit norm are renormalized; anything farther off
    is rejected as a bug rather than silently absorbed.
    """

    def __init__(self, w=1.0, x=0.0, y=0.0, z=0.0):
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if abs(n - 1.0) > UNIT_RENORM_TOL:
            raise ValueError(f"not a unit quaternion: norm={n!r}")
        object.__setattr__(self, "w", w / n)
        object.__setattr__(self, "x", x / n)
        object.__setattr__(self, "y", y / n)
        object.__setattr__(self, "z", z / n)

    def conj(self) -> "UnitQuaternion":
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    def inverse(self) -> "UnitQuaternion":
        return self.conj()


def mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product, using i^2 = j^2 = k^2 = ijk = -1."""
    return Quaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


def conj(q: Quaternion) -> Quaternion:
    return Quaternion(q.w, -q.x, -q.y, -q.z)


def normalize(q: Quaternion) -> UnitQuaternion:
    n = q.norm()
    if n == 0.0:
        raise ValueError("cannot normalize the zero quaternion")
    return UnitQuaternion(q.w / n, q.x / n, q.y / n, q.z / n)


def vec4(q: Quaternion) -> np.ndarray:
    """Coefficient vector [w, x, y, z], scalar part first."""
    return np.array([q.w, q.x, q.y, q.z])


def from_vec4(v) -> Quaternion:
    w, x, y, z = (float(c) for c in v)
    return Quaternion(w, x, y, z)


def vec3(q: Quaternion) -> np.ndarray:
    """Imaginary part [x, y, z] of a (pure) quaternion."""
    return np.array([q.x, q.y, q.z])


def pure(x: float, y: float, z: float) -> Quaternion:
    return Quaternion(0.0, x, y, z)


def from_vec3(v) -> Quaternion:
    x, y, z = (float(c) for c in v)
    return Quaternion(0.0, x, y, z)


def hamilton_left(q: Quaternion) -> np.ndarray:
    """4x4 matrix H such that vec4(q * b) = H @ vec4(b)."""
    return np.array([
        [q.w, -q.x, -q.y, -q.z],
        [q.x, q.w, -q.z, q.y],
        [q.y, q.z, q.w, -q.x],
        [q.z, -q.y, q.x, q.w],
    ])


def hamilton_right(q: Quaternion) -> np.ndarray:
    """4x4 matrix H such that vec4(a * q) = H @ vec4(a)."""
    return np.array([
        [q.w, -q.x, -q.y, -q.z],
        [q.x, q.w, q.z, -q.y],
        [q.y, -q.z, q.w, q.x],
        [q.z, q.y, -q.x, q.w],
    ])


def from_axis_angle(axis: Quaternion, angle: float) -> UnitQuaternion:
    """Rotation of `angle` rad about the unit pure-quaternion `axis`."""
    if not axis.is_pure(UNIT_RENORM_TOL):
        raise ValueError("rotation axis must be a pure quaternion")
    if abs(axis.norm() - 1.0) > UNIT_RENORM_TOL:
        raise ValueError("rotation axis must have unit norm")
    h = 0.5 * angle
    s = math.sin(h)
    return UnitQuaternion(math.cos(h), s * axis.x, s * axis.y, s * axis.z)


def rotate(r: UnitQuaternion, t: Quaternion) -> Quaternion:
    """Rotate pure quaternion t by r: r * t * conj(r)."""
    return mul(mul(r, t), r.conj())
