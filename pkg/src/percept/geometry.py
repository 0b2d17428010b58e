"""6-DoF poses (translation in meters, unit quaternion)."""

from __future__ import annotations

import math
from dataclasses import dataclass

UNIT_NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Pose:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    qx: float = 0.0
    qy: float = 0.0
    qz: float = 0.0
    qw: float = 1.0

    def quaternion_norm(self) -> float:
        return math.sqrt(self.qx**2 + self.qy**2 + self.qz**2 + self.qw**2)

    def is_normalized(self, tol: float = UNIT_NORM_TOLERANCE) -> bool:
        return abs(self.quaternion_norm() - 1.0) <= tol

    def translation_distance(self, other: "Pose") -> float:
        """Euclidean distance between translations, in meters."""
        return math.sqrt(
            (self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2
        )

    def rotation_distance(self, other: "Pose") -> float:
        """Angle in radians between the two orientations."""
        dot = (
            self.qx * other.qx
            + self.qy * other.qy
            + self.qz * other.qz
            + self.qw * other.qw
        )
        dot = max(-1.0, min(1.0, abs(dot)))
        return 2.0 * math.acos(dot)

    def as_tuple(self) -> tuple:
        return (self.x, self.y, self.z, self.qx, self.qy, self.qz, self.qw)

    @classmethod
    def from_sequence(cls, values) -> "Pose":
        vals = [float(v) for v in values]
        if len(vals) != 7:
            raise ValueError(f"pose needs 7 components, got {len(vals)}")
        return cls(*vals)
