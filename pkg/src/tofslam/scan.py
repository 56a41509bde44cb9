"""ToF matrix reduction and world-frame scan construction.

An 8x8 multi-zone ToF matrix is reduced to one planar row per sensor
(median of the middle four rows, per column), and the rows from all
sensors are projected into world-frame 2D points.  One simultaneous
read of all sensors gives a scan frame; stacking consecutive frames
while the robot spins gives a scan.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose2, rot2

TOF_GRID = 8
TOF_MAX_MM = 4000

# Rows kept by the planar reduction: two discarded from top and bottom.
_MIDDLE_ROWS = slice(2, 6)


@dataclass
class TofMatrix:
    """Raw 8x8 sensor read: integer millimeter distances plus validity flags.

    Valid distances lie in [1, 4000] mm; a 0 on the wire means invalid.
    """

    distances: np.ndarray
    validity: np.ndarray

    def __post_init__(self):
        self.distances = np.asarray(self.distances, dtype=np.int64)
        self.validity = np.asarray(self.validity, dtype=bool)
        if self.distances.shape != (TOF_GRID, TOF_GRID) or self.validity.shape != (TOF_GRID, TOF_GRID):
            raise ValueError("ToF matrix must be 8x8")
        bad = self.validity & ((self.distances < 1) | (self.distances > TOF_MAX_MM))
        if bad.any():
            raise ValueError("valid ToF distances must lie in [1, 4000] mm")

    @staticmethod
    def invalid() -> "TofMatrix":
        return TofMatrix(np.zeros((TOF_GRID, TOF_GRID), dtype=np.int64),
                         np.zeros((TOF_GRID, TOF_GRID), dtype=bool))


@dataclass(frozen=True)
class SensorGeometry:
    """Mounting of one ToF sensor in the body frame.

    offset is the sensor origin (o_x, o_y) in meters, mount_angle the
    rotation of the sensor frame w.r.t. the body frame, zone_angles the
    center angle of each of the 8 zones, and fov the full field of view.
    """

    offset: tuple[float, float] = (0.0, 0.0)
    mount_angle: float = 0.0
    fov: float = math.radians(45.0)
    zone_angles: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.zone_angles:
            object.__setattr__(self, "zone_angles", default_zone_angles(self.fov))
        th = np.asarray(self.zone_angles)
        if not np.all(np.diff(th) > 0):
            raise ValueError("zone angles must be strictly increasing")
        if not np.allclose(th, -th[::-1]):
            raise ValueError("zone angles must be symmetric about 0")
        if np.any(np.abs(th) >= self.fov / 2):
            raise ValueError("zone angles must lie inside the field of view")


def default_zone_angles(fov: float = math.radians(45.0), n_zones: int = TOF_GRID) -> tuple[float, ...]:
    """Center angles of n equal angular bins spanning the field of view."""
    return tuple(((b - (n_zones - 1) / 2) / n_zones) * fov for b in range(n_zones))


def default_sensor_rig() -> tuple[SensorGeometry, ...]:
    """Four sensors facing front, left, rear, right (mount angles 0/90/180/270)."""
    return tuple(SensorGeometry(mount_angle=g) for g in (0.0, math.pi / 2, math.pi, -math.pi / 2))


@dataclass(frozen=True)
class ScanConfig:
    n_sensors: int = 4
    n_zones: int = TOF_GRID
    frames_per_scan: int = 20
    frame_rate: float = 7.5
    spin_angle: float = math.radians(45.0)

    @property
    def capacity(self) -> int:
        return self.frames_per_scan * self.n_sensors * self.n_zones


@dataclass
class ScanFrame:
    """World-frame 2D points from one simultaneous read of all sensors."""

    points: np.ndarray
    origin_pose: Pose2

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)


@dataclass
class Scan:
    """Stacked scan frames with the pose at acquisition start."""

    points: np.ndarray
    origin_pose: Pose2

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def degenerate(self) -> bool:
        return len(self.points) == 0


def reduce_tof_matrix(m: TofMatrix) -> list[tuple[int, float]]:
    """Reduce an 8x8 matrix to per-column planar distances in meters.

    For each column, the median over the valid entries of the middle four
    rows; an even count of valid entries takes the mean of the two middle
    values, fewer than four takes the median of the valid subset, and a
    column with no valid middle entry is omitted.
    """
    rows = []
    dist = m.distances[_MIDDLE_ROWS]
    valid = m.validity[_MIDDLE_ROWS]
    for col in range(TOF_GRID):
        vals = dist[valid[:, col], col]
        if vals.size == 0:
            continue
        rows.append((col, float(np.median(vals)) / 1000.0))
    return rows


def project_frame(pose: Pose2, per_sensor_rows, geoms) -> ScanFrame:
    """Project reduced rows into the world frame.

    Each (zone, distance) pair of sensor alpha becomes the point
    (x, y) + R(psi + gamma_alpha) (d + o_x, tan(theta_zone) d + o_y).
    """
    pts = []
    for rows, geom in zip(per_sensor_rows, geoms, strict=True):
        if not rows:
            continue
        ox, oy = geom.offset
        r = rot2(pose.psi + geom.mount_angle)
        for zone, d in rows:
            local = np.array([d + ox, math.tan(geom.zone_angles[zone]) * d + oy])
            pts.append(pose.xy + r @ local)
    points = np.array(pts) if pts else np.empty((0, 2))
    if pts and not np.isfinite(points).all():
        raise ValueError("projected scan frame contains non-finite points")
    return ScanFrame(points, pose)


def assemble_scan(frames, geoms, cfg: ScanConfig) -> Scan:
    """Stack up to frames_per_scan (pose, per-sensor rows) reads into one scan.

    The scan pose is the pose of the first frame.
    """
    if not frames:
        raise ValueError("cannot assemble a scan from zero frames")
    if len(frames) > cfg.frames_per_scan:
        raise ValueError(f"scan holds at most {cfg.frames_per_scan} frames, got {len(frames)}")
    projected = [project_frame(pose, rows, geoms) for pose, rows in frames]
    pts = [f.points for f in projected if len(f.points)]
    points = np.concatenate(pts) if pts else np.empty((0, 2))
    return Scan(points, frames[0][0])
