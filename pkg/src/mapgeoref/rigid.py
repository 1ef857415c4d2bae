"""Closed-form rigid (similarity) alignment of two point sets.

The estimator minimizes the mean squared distance between index-paired
point sets over rotation, translation, and a uniform scale. The pipeline
applies only rotation and translation; the scale is reported as a
diagnostic for the odometry's scale drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, InputError
from .trajectory import PointCloud, Trajectory


@dataclass
class RigidTransform:
    """Rotation + translation + positive uniform scale."""

    rotation: np.ndarray
    translation: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if self.rotation.shape != (3, 3):
            raise InputError("rotation must be a 3x3 matrix")
        if np.max(np.abs(self.rotation.T @ self.rotation - np.eye(3))) > 1e-9:
            raise InputError("rotation must be orthonormal within 1e-9")
        if abs(np.linalg.det(self.rotation) - 1.0) > 1e-9:
            raise InputError("rotation must be proper (det = +1)")
        if not self.scale > 0:
            raise InputError("scale must be positive")

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3), 1.0)

    def matrix(self, with_scale: bool = False) -> np.ndarray:
        """4x4 homogeneous matrix (row-major)."""
        m = np.eye(4)
        m[:3, :3] = self.rotation * (self.scale if with_scale else 1.0)
        m[:3, 3] = self.translation
        return m

    def inverse(self) -> "RigidTransform":
        """Analytic inverse: x = R^T (y - t) / s."""
        rot_inv = self.rotation.T
        return RigidTransform(rot_inv, -rot_inv @ self.translation / self.scale, 1.0 / self.scale)


def _centered(points: np.ndarray, name: str) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InputError(f"{name} must be an (n, 3) array")
    mean = pts.mean(axis=0)
    return pts - mean, mean


def umeyama(source: np.ndarray, target: np.ndarray) -> RigidTransform:
    """Least-squares similarity transform mapping ``source`` onto ``target``.

    Standard closed form: centroids, 3x3 cross-covariance, its SVD with a
    sign-correction matrix that forces a proper rotation, scale from the
    covariance trace, translation from the centroids.

    Raises DegenerateInputError when fewer than 3 pairs are given or the
    source geometry is (near-)collinear.
    """
    src, src_mean = _centered(source, "source")
    tgt, tgt_mean = _centered(target, "target")
    if src.shape != tgt.shape:
        raise InputError("source and target must have equal length")
    n = len(src)
    if n < 3:
        raise DegenerateInputError(f"need at least 3 point pairs, got {n}")

    cov = tgt.T @ src / n
    u, d, vt = np.linalg.svd(cov)
    rank = int(np.sum(d > d[0] * 1e-12)) if d[0] > 0 else 0
    if rank < 2:
        raise DegenerateInputError(
            f"degenerate source geometry: covariance rank {rank} < 2"
        )
    s = np.ones(3)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        s[2] = -1.0
    rotation = u @ np.diag(s) @ vt
    var_src = np.mean(np.sum(src * src, axis=1))
    scale = float(np.dot(d, s) / var_src)
    translation = tgt_mean - scale * rotation @ src_mean
    return RigidTransform(rotation, translation, scale)


def squared_fit_error(source: np.ndarray, target: np.ndarray) -> float:
    """Minimal mean squared error of the similarity fit, via the closed form.

    Independent of :func:`umeyama`'s output; tests cross-check it against a
    direct residual recomputation.
    """
    src, _ = _centered(source, "source")
    tgt, _ = _centered(target, "target")
    n = len(src)
    if n < 3:
        raise DegenerateInputError(f"need at least 3 point pairs, got {n}")
    cov = tgt.T @ src / n
    d = np.linalg.svd(cov, compute_uv=False)
    u, _, vt = np.linalg.svd(cov)
    sign = -1.0 if np.linalg.det(u) * np.linalg.det(vt) < 0 else 1.0
    trace = d[0] + d[1] + sign * d[2]
    var_src = np.mean(np.sum(src * src, axis=1))
    var_tgt = np.mean(np.sum(tgt * tgt, axis=1))
    return float(var_tgt - trace * trace / var_src)


def transform_points(
    tf: RigidTransform, points: np.ndarray, with_scale: bool = False
) -> np.ndarray:
    """Apply ``x -> (s) R x + t`` to an (n, 3) array."""
    pts = np.asarray(points, dtype=np.float64)
    factor = tf.scale if with_scale else 1.0
    return pts @ (factor * tf.rotation).T + tf.translation


def apply_rigid(tf, obj, with_scale: bool = False):
    """Transform a Trajectory, PointCloud, or bare (n, 3) array.

    Timestamps, stddev, and intensity pass through untouched. The scale is
    only applied when ``with_scale`` is set; the pipeline leaves it off
    because both trajectories already share a metric scale.
    """
    if isinstance(obj, Trajectory):
        return obj.with_positions(transform_points(tf, obj.positions, with_scale))
    if isinstance(obj, PointCloud):
        return obj.with_points(transform_points(tf, obj.points, with_scale))
    return transform_points(tf, obj, with_scale)
