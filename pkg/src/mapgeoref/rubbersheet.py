"""Piecewise-linear 3D warp built from control point pairs.

Control points pair positions on the rigidly aligned odometry trajectory
(source) with their interpolated global counterparts (target). Eight
identity pairs on an enclosing cuboid pin the boundary, a Delaunay
tetrahedralization of the source points partitions space, and each
tetrahedron gets the affine map that sends its source vertices exactly to
their targets. Warping a point means locating its tetrahedron and applying
that tetrahedron's matrix; because the per-tetrahedron maps agree on
shared faces, the warp is continuous and topology-preserving.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .delaunay import OUTSIDE, Tetrahedralization, tetrahedralize
from .errors import DegenerateInputError, InputError, NumericalError, SingularTransformError
from .interpolation import MatchedTrajectories
from .trajectory import PointCloud, Trajectory

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
AFFINE_ROW_TOL = 1e-9
CP_EXACTNESS_TOL = 1e-6

DEFAULT_CUBOID_FACTOR_XY = 0.1
DEFAULT_CUBOID_FACTOR_Z = 10.0


@dataclass
class ControlPointPair:
    """Source/target correspondence driving the warp."""

    source: np.ndarray
    target: np.ndarray
    kind: str = "trajectory"
    source_index: int | None = None

    def __post_init__(self):
        self.source = np.asarray(self.source, dtype=np.float64).reshape(3)
        self.target = np.asarray(self.target, dtype=np.float64).reshape(3)
        if self.kind not in ("trajectory", "cuboid_corner"):
            raise InputError(f"unknown control point kind '{self.kind}'")
        if self.kind == "cuboid_corner" and not np.array_equal(self.source, self.target):
            raise InputError("cuboid corners must be identity pairs")


@dataclass
class WarpStats:
    """Per-point displacement magnitudes plus the outside-hull counter."""

    displacements: np.ndarray
    outside_count: int

    @property
    def min(self) -> float:
        return float(self.displacements.min()) if len(self.displacements) else 0.0

    @property
    def max(self) -> float:
        return float(self.displacements.max()) if len(self.displacements) else 0.0

    @property
    def mean(self) -> float:
        return float(self.displacements.mean()) if len(self.displacements) else 0.0


@dataclass
class RubberSheet:
    """Control points, their source-side tetrahedralization, and the
    per-tetrahedron 4x4 transforms."""

    pairs: list[ControlPointPair]
    triangulation: Tetrahedralization
    transforms: np.ndarray
    conditions: np.ndarray

    def __post_init__(self):
        if len(self.transforms) != len(self.triangulation):
            raise InputError("one transform per tetrahedron required")


def candidate_indices(n: int, n_cp: int) -> list[int]:
    """The ``n_cp`` evenly spaced indices into ``n`` matched keyframes,
    deduplicated and sorted."""
    if n_cp < 1:
        raise InputError(f"n_cp must be >= 1, got {n_cp}")
    if n < 1:
        raise InputError("no matched keyframes to pick control points from")
    if n_cp == 1:
        return [0]
    return sorted({round(k * (n - 1) / (n_cp - 1)) for k in range(n_cp)})


def select_control_points(
    m: MatchedTrajectories, n_cp: int, stddev_max: float
) -> list[ControlPointPair]:
    """Evenly spread ``n_cp`` candidates over the matched keyframes.

    Candidates whose GNSS stddev exceeds ``stddev_max`` in any component
    are skipped without replacement, so poorly observed sections simply
    contribute no constraint. Duplicated candidate indices (short
    trajectories) collapse to one pair each.
    """
    pairs = []
    skipped = 0
    for i in candidate_indices(len(m.odometry), n_cp):
        if m.stddev is not None and np.any(m.stddev[i] > stddev_max):
            skipped += 1
            continue
        pairs.append(
            ControlPointPair(
                m.odometry.positions[i], m.target.positions[i], "trajectory", i
            )
        )
    if not pairs:
        raise NumericalError(
            f"all {skipped} control point candidates exceeded "
            f"the stddev threshold {stddev_max} m"
        )
    if skipped:
        logger.info("skipped %d control point candidates over stddev threshold", skipped)
    return pairs


def enclosing_cuboid(
    source_traj,
    target_traj,
    factor_xy: float = DEFAULT_CUBOID_FACTOR_XY,
    factor_z: float = DEFAULT_CUBOID_FACTOR_Z,
) -> list[ControlPointPair]:
    """Eight identity pairs on the expanded bounding box of both trajectories.

    Each axis is padded on both sides by factor * extent (``factor_xy`` for
    x and y, ``factor_z`` for z), so deformation decays to zero toward the
    cuboid corners and nothing inside the data region can fall outside the
    triangulated domain.
    """
    if factor_xy <= 0 or factor_z <= 0:
        raise InputError("cuboid expansion factors must be positive")
    pts = [
        t.positions if isinstance(t, Trajectory) else np.asarray(t, dtype=np.float64)
        for t in (source_traj, target_traj)
    ]
    union = np.vstack(pts)
    if len(union) == 0:
        raise InputError("cannot build a cuboid around empty trajectories")
    lo = union.min(axis=0)
    hi = union.max(axis=0)
    extent = hi - lo
    pad = extent * np.array([factor_xy, factor_xy, factor_z])
    lo = lo - pad
    hi = hi + pad
    for axis, name in enumerate("xyz"):
        if hi[axis] - lo[axis] <= 0:
            raise DegenerateInputError(
                f"trajectories have zero extent along {name} even after expansion"
            )
    corners = [
        np.array(c) for c in itertools.product((lo[0], hi[0]), (lo[1], hi[1]), (lo[2], hi[2]))
    ]
    return [ControlPointPair(c, c.copy(), "cuboid_corner") for c in corners]


def solve_transforms(pairs: list[ControlPointPair]) -> RubberSheet:
    """Tetrahedralize the source points and fit one affine map per cell.

    For each tetrahedron the 16 entries of its matrix solve the stacked
    homogeneous correspondences of the four vertex pairs; the solve is a
    rank-revealing SVD least-squares factorization and each vertex matrix's
    condition number is recorded. Systems conditioned worse than 1e12 are
    rejected naming the offending vertices.
    """
    if len(pairs) < 4:
        raise InputError(f"need at least 4 control point pairs, got {len(pairs)}")
    sources = np.array([p.source for p in pairs])
    targets = np.array([p.target for p in pairs])
    tri = tetrahedralize(sources)

    n_tet = len(tri)
    transforms = np.empty((n_tet, 4, 4))
    conditions = np.empty(n_tet)
    src_h = np.concatenate([sources, np.ones((len(sources), 1))], axis=1)
    tgt_h = np.concatenate([targets, np.ones((len(targets), 1))], axis=1)
    for j in range(n_tet):
        idx = tri.tetrahedra[j]
        a = src_h[idx]
        b = tgt_h[idx]
        cond = float(np.linalg.cond(a))
        conditions[j] = cond
        if cond > CONDITION_LIMIT:
            raise SingularTransformError(j, tuple(int(i) for i in idx), cond)
        t_transposed, *_ = np.linalg.lstsq(a, b, rcond=None)
        transforms[j] = t_transposed.T
        if np.max(np.abs(transforms[j][3] - (0.0, 0.0, 0.0, 1.0))) > AFFINE_ROW_TOL:
            raise NumericalError(
                f"tetrahedron {j}: solved transform is not affine "
                f"(bottom row {transforms[j][3]})"
            )
    # Exactness of the vertex correspondences (the defining property).
    mapped = np.einsum("tij,tvj->tvi", transforms, src_h[tri.tetrahedra])
    mapped = mapped[..., :3] / mapped[..., 3:]
    err = np.linalg.norm(mapped - targets[tri.tetrahedra], axis=2)
    if n_tet and err.max() > CP_EXACTNESS_TOL:
        j = int(np.unravel_index(err.argmax(), err.shape)[0])
        raise NumericalError(
            f"tetrahedron {j}: vertex maps miss their targets by {err.max():.3e} m"
        )
    logger.debug(
        "solved %d tetrahedra, condition numbers %.3e..%.3e",
        n_tet,
        conditions.min() if n_tet else 0.0,
        conditions.max() if n_tet else 0.0,
    )
    return RubberSheet(list(pairs), tri, transforms, conditions)


def _warp_one(rs: RubberSheet, point, start: int | None):
    """Warp a single point; returns (warped, located tetra or OUTSIDE)."""
    j = rs.triangulation.locate(point, start)
    if j == OUTSIDE:
        return np.asarray(point, dtype=np.float64).copy(), OUTSIDE
    h = rs.transforms[j] @ (point[0], point[1], point[2], 1.0)
    return h[:3] / h[3], j


def transform_point(rs: RubberSheet, x, start: int | None = None) -> np.ndarray:
    """Warp one point; points outside the hull pass through unchanged."""
    warped, _ = _warp_one(rs, np.asarray(x, dtype=np.float64), start)
    return warped


def transform_points(rs: RubberSheet, points: np.ndarray) -> tuple[np.ndarray, WarpStats]:
    """Warp an (n, 3) array, reusing each hit as the next walk seed."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    out = np.empty_like(pts)
    outside = 0
    seed: int | None = None
    for i, p in enumerate(pts):
        warped, j = _warp_one(rs, p, seed)
        out[i] = warped
        if j == OUTSIDE:
            outside += 1
        else:
            seed = j
    stats = WarpStats(np.linalg.norm(out - pts, axis=1), outside)
    if outside:
        logger.warning("%d points fell outside the rubber-sheet hull", outside)
    return out, stats


def transform_cloud(rs: RubberSheet, pc: PointCloud) -> tuple[PointCloud, WarpStats]:
    """Warp a point cloud; intensity and storage dtype pass through."""
    warped, stats = transform_points(rs, pc.points)
    return pc.with_points(warped), stats


def transform_trajectory(rs: RubberSheet, traj: Trajectory) -> tuple[Trajectory, WarpStats]:
    """Warp trajectory positions; timestamps and stddev pass through."""
    warped, stats = transform_points(rs, traj.positions)
    return traj.with_positions(warped), stats
