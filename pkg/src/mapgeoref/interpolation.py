"""Temporal matching of odometry keyframes against a GNSS trajectory.

Each odometry keyframe gets a globally referenced counterpart by evaluating
a cubic spline through four well-spread GNSS frames around its timestamp.
Keyframes that cannot be supported (outside GNSS coverage, or too few
spacing-compliant frames nearby) are dropped, never extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, InsufficientSupportError, OutOfRangeError
from .trajectory import Trajectory

DEFAULT_MIN_DISTANCE_M = 0.5


@dataclass
class SplineSegment:
    """Degree-3 spline support: four reference points and their parameters.

    ``reference_times`` are the frames' timestamps affinely mapped so the
    earliest becomes 0 and the latest becomes 1; ``time_origin`` and
    ``time_span`` keep that map so query timestamps can be normalized the
    same way.
    """

    reference_points: np.ndarray
    reference_times: np.ndarray
    time_origin: float = 0.0
    time_span: float = 1.0

    degree = 3

    def __post_init__(self):
        self.reference_points = np.asarray(self.reference_points, dtype=np.float64)
        self.reference_times = np.asarray(self.reference_times, dtype=np.float64)
        if self.reference_points.shape != (4, 3):
            raise InputError("a cubic segment needs exactly 4 reference points")
        if self.reference_times.shape != (4,):
            raise InputError("a cubic segment needs exactly 4 reference times")
        if self.reference_times[0] != 0.0 or self.reference_times[-1] != 1.0:
            raise InputError("reference times must start at 0 and end at 1")
        if np.any(np.diff(self.reference_times) <= 0):
            raise InputError("reference times must increase strictly")
        if self.time_span <= 0:
            raise InputError("time span must be positive")

    def normalize_time(self, t: float) -> float:
        """Map a timestamp through the same affine map as the frames."""
        return (t - self.time_origin) / self.time_span


@dataclass
class MatchedTrajectories:
    """Index-aligned odometry/target pairs plus the dropped keyframes.

    ``odometry`` holds the matched keyframes in their local frame,
    ``target`` their interpolated global positions at identical timestamps.
    ``dropped`` lists indices into the original odometry trajectory.
    """

    odometry: Trajectory
    target: Trajectory
    stddev: np.ndarray | None
    dropped: np.ndarray

    def __post_init__(self):
        self.dropped = np.asarray(self.dropped, dtype=np.intp)
        if len(self.odometry) != len(self.target):
            raise InputError("odometry and target must have equal length")
        if not np.array_equal(self.odometry.timestamps, self.target.timestamps):
            raise InputError("target must inherit the odometry timestamps")
        if self.stddev is not None:
            self.stddev = np.asarray(self.stddev, dtype=np.float64)
            if self.stddev.shape != (len(self.odometry), 3):
                raise InputError("stddev must be (n, 3) for n matched keyframes")

    @property
    def total_keyframes(self) -> int:
        return len(self.odometry) + len(self.dropped)

    @property
    def matched_indices(self) -> np.ndarray:
        """Original odometry indices of the matched keyframes, ascending."""
        mask = np.ones(self.total_keyframes, dtype=bool)
        mask[self.dropped] = False
        return np.flatnonzero(mask)


def select_reference_frames(
    gnss: Trajectory, t_o: float, d_min: float = DEFAULT_MIN_DISTANCE_M
) -> SplineSegment:
    """Pick two GNSS frames before and two after ``t_o``, spaced >= d_min.

    Scanning starts at the temporally closest frames and continues outward
    whenever a candidate lies closer than ``d_min`` (Euclidean) to any
    already accepted frame, so stretches where the vehicle stood still
    cannot collapse the spline support.
    """
    times = gnss.timestamps
    if len(times) < 4:
        raise InsufficientSupportError("need at least 4 GNSS frames")
    if t_o < times[0] or t_o > times[-1]:
        raise OutOfRangeError(
            f"timestamp {t_o} outside GNSS coverage [{times[0]}, {times[-1]}]"
        )
    i_before = int(np.searchsorted(times, t_o, side="right")) - 1

    accepted: list[int] = []

    def far_enough(i: int) -> bool:
        p = gnss.positions[i]
        return all(np.linalg.norm(p - gnss.positions[j]) >= d_min for j in accepted)

    before = 0
    for i in range(i_before, -1, -1):
        if far_enough(i):
            accepted.append(i)
            before += 1
            if before == 2:
                break
    if before < 2:
        raise InsufficientSupportError(
            f"only {before} spacing-compliant frames before t={t_o}"
        )
    after = 0
    for i in range(i_before + 1, len(times)):
        if far_enough(i):
            accepted.append(i)
            after += 1
            if after == 2:
                break
    if after < 2:
        raise InsufficientSupportError(
            f"only {after} spacing-compliant frames after t={t_o}"
        )

    idx = sorted(accepted)
    t_first = times[idx[0]]
    span = times[idx[-1]] - t_first
    return SplineSegment(
        gnss.positions[idx],
        (times[idx] - t_first) / span,
        time_origin=float(t_first),
        time_span=float(span),
    )


def _bernstein_row(u: float) -> np.ndarray:
    v = 1.0 - u
    return np.array([v * v * v, 3.0 * u * v * v, 3.0 * u * u * v, u * u * u])


def _control_points(seg: SplineSegment) -> np.ndarray:
    """Solve the interpolation conditions for the B-spline control points.

    With the clamped knot vector the cubic basis on [0, 1] reduces to the
    Bernstein polynomials, so the collocation matrix is 4x4 and the
    interpolating spline is the unique cubic through the reference points.
    """
    collocation = np.stack([_bernstein_row(u) for u in seg.reference_times])
    base = seg.reference_points[0]
    return np.linalg.solve(collocation, seg.reference_points - base), base


def evaluate_spline(seg: SplineSegment, u: float) -> np.ndarray:
    """Evaluate the interpolating cubic spline at normalized parameter u."""
    if not 0.0 <= u <= 1.0:
        raise OutOfRangeError(f"spline parameter {u} outside [0, 1]")
    control, base = _control_points(seg)
    # de Casteljau on the single clamped span
    pts = control.copy()
    for level in range(3, 0, -1):
        pts[:level] = (1.0 - u) * pts[:level] + u * pts[1 : level + 1]
    return pts[0] + base


def interpolate_trajectory(
    gnss: Trajectory, odometry: Trajectory, d_min: float = DEFAULT_MIN_DISTANCE_M
) -> MatchedTrajectories:
    """Interpolate a global position for every supportable odometry keyframe.

    The per-keyframe spline support is selected independently, the keyframe
    timestamp is normalized by the same affine map as the support frames,
    and the stddev of the temporally nearest GNSS fix is attached to the
    matched point.
    """
    matched: list[int] = []
    dropped: list[int] = []
    positions = []
    stddevs = [] if gnss.stddev is not None else None
    gnss_times = gnss.timestamps
    for k, t_o in enumerate(odometry.timestamps):
        try:
            seg = select_reference_frames(gnss, float(t_o), d_min)
        except (OutOfRangeError, InsufficientSupportError):
            dropped.append(k)
            continue
        positions.append(evaluate_spline(seg, seg.normalize_time(float(t_o))))
        matched.append(k)
        if stddevs is not None:
            nearest = int(np.argmin(np.abs(gnss_times - t_o)))
            stddevs.append(gnss.stddev[nearest])
    if not matched:
        raise InputError("no odometry keyframe falls within usable GNSS coverage")
    times = odometry.timestamps[matched]
    return MatchedTrajectories(
        odometry=odometry.take(matched),
        target=Trajectory(times, np.array(positions)),
        stddev=None if stddevs is None else np.array(stddevs),
        dropped=np.array(dropped, dtype=np.intp),
    )
