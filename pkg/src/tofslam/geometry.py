"""Planar poses, angle arithmetic, and rigid-body transforms.

Everything here is pure 64-bit float math shared by every other module:
poses are (x, y, psi) with psi kept in (-pi, pi], and rigid transforms are
a rotation angle plus a translation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TAU = math.tau


def angle_norm(a: float) -> float:
    """Normalize an angle to the half-open interval (-pi, pi].

    Ties at -pi map to +pi so the normalization is deterministic.
    Raises ValueError on non-finite input.
    """
    if not math.isfinite(a):
        raise ValueError(f"non-finite angle: {a!r}")
    r = math.remainder(a, TAU)  # [-pi, pi]
    if r <= -math.pi:
        r += TAU
    return r


def rot2(theta: float) -> np.ndarray:
    """2x2 rotation matrix [[cos, -sin], [sin, cos]] for a finite angle."""
    if not math.isfinite(theta):
        raise ValueError(f"non-finite angle: {theta!r}")
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Pose2:
    """Planar pose: position in meters, heading in radians.

    The heading is normalized to (-pi, pi] on construction, so any
    arithmetic that writes psi goes through the same normalization.
    """

    x: float
    y: float
    psi: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite pose position: ({self.x!r}, {self.y!r})")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "psi", angle_norm(float(self.psi)))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi])

    @staticmethod
    def from_array(v) -> "Pose2":
        return Pose2(float(v[0]), float(v[1]), float(v[2]))

    def distance_to(self, other: "Pose2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def transform(self) -> "Rigid2":
        """World transform of this pose (body frame -> world frame)."""
        return Rigid2(self.psi, (self.x, self.y))


@dataclass(frozen=True)
class Rigid2:
    """Planar rigid-body transform: p -> R(rotation) p + translation."""

    rotation: float
    translation: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "rotation", angle_norm(self.rotation))
        tx, ty = self.translation
        object.__setattr__(self, "translation", (float(tx), float(ty)))

    @staticmethod
    def identity() -> "Rigid2":
        return Rigid2(0.0, (0.0, 0.0))

    def matrix(self) -> np.ndarray:
        return rot2(self.rotation)

    def apply(self, points) -> np.ndarray:
        """Apply to a single (2,) point or an (N, 2) array of points."""
        p = np.asarray(points, dtype=float)
        return p @ self.matrix().T + np.asarray(self.translation)

    def compose(self, other: "Rigid2") -> "Rigid2":
        """self after other: (self.compose(other)).apply(p) == self.apply(other.apply(p))."""
        t = self.apply(np.asarray(other.translation))
        return Rigid2(self.rotation + other.rotation, (float(t[0]), float(t[1])))

    def inverse(self) -> "Rigid2":
        t = rot2(-self.rotation) @ (-np.asarray(self.translation))
        return Rigid2(-self.rotation, (float(t[0]), float(t[1])))

    def apply_pose(self, pose: Pose2) -> Pose2:
        t = self.apply(pose.xy)
        return Pose2(float(t[0]), float(t[1]), pose.psi + self.rotation)

    @property
    def magnitude(self) -> float:
        """Size of the motion: translation norm plus absolute rotation."""
        return math.hypot(*self.translation) + abs(self.rotation)


def relative_pose(a: Pose2, b: Pose2) -> "Rigid2":
    """Transform of b expressed in a's frame: a.transform() o result == b.transform()."""
    return a.transform().inverse().compose(b.transform())
