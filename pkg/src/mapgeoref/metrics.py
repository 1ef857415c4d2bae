"""Deviation statistics between index-aligned trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .trajectory import Trajectory


@dataclass(frozen=True)
class DeviationReport:
    """Per-point Euclidean deviation plus summary statistics.

    ``stddev`` is the population standard deviation (divide by N).
    """

    per_point: np.ndarray
    mae: float
    stddev: float
    max: float


def _positions(obj) -> np.ndarray:
    if isinstance(obj, Trajectory):
        return obj.positions
    return np.asarray(obj, dtype=np.float64).reshape(-1, 3)


def deviation_report(odom, target) -> DeviationReport:
    """Euclidean deviation of each point to its index-aligned counterpart.

    Every point counts: no filtering by GNSS quality happens here, so the
    statistics describe the whole matched trajectory.
    """
    a = _positions(odom)
    b = _positions(target)
    if a.shape != b.shape:
        raise InputError(f"trajectory lengths differ: {len(a)} vs {len(b)}")
    per_point = np.linalg.norm(a - b, axis=1)
    return DeviationReport(
        per_point=per_point,
        mae=float(per_point.mean()),
        stddev=float(per_point.std()),
        max=float(per_point.max()),
    )
