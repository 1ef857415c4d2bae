"""Core containers: timed 3D trajectories and point clouds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


@dataclass
class Trajectory:
    """Time-ordered sequence of 3D positions in a metric frame.

    ``stddev`` carries the per-axis 1-sigma of the producing sensor when
    known (GNSS-derived trajectories); it is ``None`` for odometry.
    """

    timestamps: np.ndarray
    positions: np.ndarray
    stddev: np.ndarray | None = None

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        self.positions = np.asarray(self.positions, dtype=np.float64)
        if self.timestamps.ndim != 1:
            raise InputError("timestamps must be a 1-D array")
        if self.positions.shape != (len(self.timestamps), 3):
            raise InputError(
                f"positions shape {self.positions.shape} does not match "
                f"{len(self.timestamps)} timestamps"
            )
        if not np.all(np.isfinite(self.timestamps)):
            raise InputError("timestamps must be finite")
        if not np.all(np.isfinite(self.positions)):
            raise InputError("positions must be finite")
        steps = np.diff(self.timestamps)
        if np.any(steps <= 0):
            bad = int(np.argmax(steps <= 0)) + 1
            raise InputError(f"timestamps must increase strictly; violation at index {bad}")
        if self.stddev is not None:
            self.stddev = np.asarray(self.stddev, dtype=np.float64)
            if self.stddev.shape != self.positions.shape:
                raise InputError("stddev must be (n, 3) like positions")
            if np.any(self.stddev < 0) or not np.all(np.isfinite(self.stddev)):
                raise InputError("stddev components must be finite and >= 0")

    def __len__(self) -> int:
        return len(self.timestamps)

    def take(self, indices) -> "Trajectory":
        """Subset by index, keeping ordering and optional stddev."""
        idx = np.asarray(indices, dtype=np.intp)
        return Trajectory(
            self.timestamps[idx],
            self.positions[idx],
            None if self.stddev is None else self.stddev[idx],
        )

    def with_positions(self, positions: np.ndarray) -> "Trajectory":
        """Same timing and stddev, new coordinates."""
        return Trajectory(self.timestamps.copy(), positions, None if self.stddev is None else self.stddev.copy())


@dataclass
class PointCloud:
    """Unordered set of 3D points with optional per-point intensity.

    ``source_dtype`` remembers the scalar width the cloud was read from (or
    should be written with); coordinates are always held as float64.
    """

    points: np.ndarray
    intensity: np.ndarray | None = None
    source_dtype: np.dtype = field(default_factory=lambda: np.dtype(np.float32))

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(self.points)):
            raise InputError("point cloud coordinates must be finite")
        if self.intensity is not None:
            self.intensity = np.asarray(self.intensity, dtype=np.float64).reshape(-1)
            if len(self.intensity) != len(self.points):
                raise InputError("intensity length must match point count")
        self.source_dtype = np.dtype(self.source_dtype)
        if self.source_dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
            raise InputError("source_dtype must be float32 or float64")

    def __len__(self) -> int:
        return len(self.points)

    def with_points(self, points: np.ndarray) -> "PointCloud":
        """Same attributes, new coordinates."""
        return PointCloud(
            points,
            None if self.intensity is None else self.intensity.copy(),
            self.source_dtype,
        )
