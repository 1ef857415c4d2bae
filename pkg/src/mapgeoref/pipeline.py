"""Configuration-driven orchestration of the full georeferencing flow.

Stages: project GNSS fixes to ENU, interpolate per-keyframe targets,
rigidly align odometry and cloud, build the rubber sheet from gated
control points plus the enclosing cuboid, warp trajectory and cloud, and
report deviations after both correction stages. All outputs are written
only after every stage succeeded, so a failing run leaves no partial
files.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GeorefError, InputError, PipelineError
from .geodesy import EnuOrigin, project_trajectory
from .interpolation import DEFAULT_MIN_DISTANCE_M, MatchedTrajectories, interpolate_trajectory
from .io import (
    parse_gnss_log,
    parse_odometry_poses,
    read_point_cloud,
    write_plot_data,
    write_point_cloud,
)
from .metrics import DeviationReport, deviation_report
from .rigid import RigidTransform, apply_rigid, umeyama
from .rubbersheet import (
    DEFAULT_CUBOID_FACTOR_XY,
    DEFAULT_CUBOID_FACTOR_Z,
    RubberSheet,
    candidate_indices,
    enclosing_cuboid,
    select_control_points,
    solve_transforms,
    transform_cloud,
    transform_trajectory,
)

logger = logging.getLogger(__name__)

_CONFIG_KEYS = {
    "gnss_path",
    "odometry_path",
    "odometry_format",
    "odometry_timestamps_path",
    "cloud_path",
    "output_dir",
    "enu_origin",
    "spline_min_distance_m",
    "n_cp",
    "stddev_threshold_m",
    "cuboid_factor_xy",
    "cuboid_factor_z",
    "pcd_encoding",
}


@dataclass
class PipelineConfig:
    """Validated run configuration; see the README for the key reference."""

    gnss_path: str
    odometry_path: str
    cloud_path: str
    output_dir: str
    n_cp: int
    odometry_format: str = "tum"
    odometry_timestamps_path: str | None = None
    enu_origin: EnuOrigin | None = None
    spline_min_distance_m: float = DEFAULT_MIN_DISTANCE_M
    stddev_threshold_m: float = 0.25
    cuboid_factor_xy: float = DEFAULT_CUBOID_FACTOR_XY
    cuboid_factor_z: float = DEFAULT_CUBOID_FACTOR_Z
    pcd_encoding: str = "binary"

    def __post_init__(self):
        for name in ("gnss_path", "odometry_path", "cloud_path", "output_dir"):
            if not getattr(self, name):
                raise InputError(f"config key '{name}' must be a nonempty path")
        if self.odometry_format not in ("tum", "kitti"):
            raise InputError(f"odometry_format must be 'tum' or 'kitti', got '{self.odometry_format}'")
        if self.odometry_format == "kitti" and not self.odometry_timestamps_path:
            raise InputError("KITTI odometry requires odometry_timestamps_path")
        if self.n_cp < 1:
            raise InputError(f"n_cp must be >= 1, got {self.n_cp}")
        for name in ("spline_min_distance_m", "stddev_threshold_m", "cuboid_factor_xy", "cuboid_factor_z"):
            if not getattr(self, name) > 0:
                raise InputError(f"config key '{name}' must be positive")
        if self.pcd_encoding not in ("binary", "ascii"):
            raise InputError(f"pcd_encoding must be 'binary' or 'ascii', got '{self.pcd_encoding}'")


def parse_config(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` config text into a raw string mapping."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InputError(f"config line {lineno} is not 'key = value': '{line}'")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise InputError(f"unknown config key '{key}' on line {lineno}")
        if key in values:
            raise InputError(f"duplicate config key '{key}' on line {lineno}")
        values[key] = value
    return values


def config_from_mapping(values: dict[str, str]) -> PipelineConfig:
    """Build a validated PipelineConfig from raw string values."""
    def number(key, cast):
        try:
            return cast(values[key])
        except ValueError:
            raise InputError(f"config key '{key}' has non-numeric value '{values[key]}'") from None

    kwargs: dict = {}
    for key in ("gnss_path", "odometry_path", "cloud_path", "output_dir",
                "odometry_format", "odometry_timestamps_path", "pcd_encoding"):
        if key in values:
            kwargs[key] = values[key]
    if "n_cp" in values:
        kwargs["n_cp"] = number("n_cp", int)
    for key in ("spline_min_distance_m", "stddev_threshold_m", "cuboid_factor_xy", "cuboid_factor_z"):
        if key in values:
            kwargs[key] = number(key, float)
    if "enu_origin" in values:
        parts = values["enu_origin"].replace(",", " ").split()
        if len(parts) != 3:
            raise InputError("enu_origin must be 'lat lon alt'")
        try:
            lat, lon, alt = (float(p) for p in parts)
        except ValueError:
            raise InputError(f"enu_origin has non-numeric parts: '{values['enu_origin']}'") from None
        kwargs["enu_origin"] = EnuOrigin(lat, lon, alt)
    missing = {"gnss_path", "odometry_path", "cloud_path", "output_dir", "n_cp"} - set(kwargs)
    if missing:
        raise InputError(f"config is missing required keys: {', '.join(sorted(missing))}")
    return PipelineConfig(**kwargs)


@dataclass
class RunReport:
    """Counts, transforms, and deviation statistics of one pipeline run.

    ``timings`` is informational only and deliberately left out of the
    rendered report so reruns on identical inputs stay byte-identical.
    """

    gnss_fixes: int
    poses_matched: int
    poses_dropped: int
    control_points_selected: int
    control_points_skipped: int
    cloud_points: int
    trajectory_points_outside: int
    cloud_points_outside: int
    enu_origin: EnuOrigin
    rigid_transform: RigidTransform
    rigid_fit_mse: float
    tetrahedra: int
    condition_numbers: np.ndarray
    deviation_after_alignment: DeviationReport
    deviation_after_sheet: DeviationReport
    timings: dict[str, float] = field(default_factory=dict)


def render_report(report: RunReport) -> str:
    """Deterministic key/value serialization of a RunReport."""
    tf = report.rigid_transform
    lines = [
        "mapgeoref run report",
        f"gnss_fixes: {report.gnss_fixes}",
        f"poses_matched: {report.poses_matched}",
        f"poses_dropped: {report.poses_dropped}",
        f"control_points_selected: {report.control_points_selected}",
        f"control_points_skipped: {report.control_points_skipped}",
        f"cloud_points: {report.cloud_points}",
        f"trajectory_points_outside: {report.trajectory_points_outside}",
        f"cloud_points_outside: {report.cloud_points_outside}",
        f"enu_origin_lat_deg: {report.enu_origin.latitude!r}",
        f"enu_origin_lon_deg: {report.enu_origin.longitude!r}",
        f"enu_origin_alt_m: {report.enu_origin.altitude!r}",
    ]
    matrix = tf.matrix(with_scale=False)
    for r in range(4):
        lines.append("rigid_transform_row%d: %s" % (r, " ".join(repr(v) for v in matrix[r])))
    lines.append(f"rigid_scale: {tf.scale!r}")
    lines.append(f"rigid_fit_mse_m2: {report.rigid_fit_mse!r}")
    lines.append(f"tetrahedra: {report.tetrahedra}")
    lines.append(
        "tetrahedron_condition_numbers: "
        + " ".join(repr(float(c)) for c in report.condition_numbers)
    )
    lines.append("stddev_convention: population")
    for name, dev in (
        ("after_alignment", report.deviation_after_alignment),
        ("after_rubber_sheet", report.deviation_after_sheet),
    ):
        lines.append(f"deviation_{name}_mae_m: {dev.mae!r}")
        lines.append(f"deviation_{name}_stddev_m: {dev.stddev!r}")
        lines.append(f"deviation_{name}_max_m: {dev.max!r}")
    return "\n".join(lines) + "\n"


class _Stage:
    """Context manager: wraps stage errors and records wall time."""

    def __init__(self, name: str, timings: dict[str, float]):
        self.name = name
        self.timings = timings

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        self.timings[self.name] = elapsed
        if exc is None:
            logger.info("stage %s finished in %.3f s", self.name, elapsed)
            return False
        if isinstance(exc, GeorefError) and not isinstance(exc, PipelineError):
            raise PipelineError(self.name, exc) from exc
        return False


def _read_input(path: str) -> bytes:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"input file not found: {path}")
    return p.read_bytes()


def run_pipeline(config: PipelineConfig) -> RunReport:
    """Execute the full georeferencing flow described by ``config``."""
    timings: dict[str, float] = {}

    with _Stage("parse", timings):
        fixes = parse_gnss_log(_read_input(config.gnss_path))
        ts_bytes = (
            _read_input(config.odometry_timestamps_path)
            if config.odometry_format == "kitti"
            else None
        )
        odometry = parse_odometry_poses(
            _read_input(config.odometry_path), config.odometry_format, ts_bytes
        )
        cloud = read_point_cloud(_read_input(config.cloud_path))
        if not fixes:
            raise InputError(f"GNSS log '{config.gnss_path}' contains no fixes")

    with _Stage("project", timings):
        origin = config.enu_origin or EnuOrigin.from_position(fixes[0])
        gnss_traj = project_trajectory(fixes, origin)

    with _Stage("interpolate", timings):
        matched = interpolate_trajectory(gnss_traj, odometry, config.spline_min_distance_m)

    with _Stage("align", timings):
        rigid = umeyama(matched.odometry.positions, matched.target.positions)
        aligned_odo = apply_rigid(rigid, matched.odometry)
        aligned_cloud = apply_rigid(rigid, cloud)
        residuals = aligned_odo.positions - matched.target.positions
        rigid_fit_mse = float(np.mean(np.sum(residuals * residuals, axis=1)))
        dev_align = deviation_report(aligned_odo, matched.target)

    with _Stage("rubber_sheet", timings):
        aligned_matched = MatchedTrajectories(
            aligned_odo, matched.target, matched.stddev, matched.dropped
        )
        cps = select_control_points(aligned_matched, config.n_cp, config.stddev_threshold_m)
        skipped = len(candidate_indices(len(aligned_odo), config.n_cp)) - len(cps)
        corners = enclosing_cuboid(
            aligned_odo, matched.target, config.cuboid_factor_xy, config.cuboid_factor_z
        )
        sheet = solve_transforms(cps + corners)

    with _Stage("transform", timings):
        warped_traj, traj_stats = transform_trajectory(sheet, aligned_odo)
        warped_cloud, cloud_stats = transform_cloud(sheet, aligned_cloud)
        dev_sheet = deviation_report(warped_traj, matched.target)

    report = RunReport(
        gnss_fixes=len(fixes),
        poses_matched=len(matched.odometry),
        poses_dropped=len(matched.dropped),
        control_points_selected=len(cps),
        control_points_skipped=skipped,
        cloud_points=len(cloud),
        trajectory_points_outside=traj_stats.outside_count,
        cloud_points_outside=cloud_stats.outside_count,
        enu_origin=origin,
        rigid_transform=rigid,
        rigid_fit_mse=rigid_fit_mse,
        tetrahedra=len(sheet.triangulation),
        condition_numbers=sheet.conditions,
        deviation_after_alignment=dev_align,
        deviation_after_sheet=dev_sheet,
        timings=timings,
    )

    with _Stage("write", timings):
        _write_outputs(config, report, warped_traj, warped_cloud, aligned_odo, dev_align, dev_sheet, sheet)
    return report


def _write_outputs(config, report, warped_traj, warped_cloud, aligned_odo, dev_align, dev_sheet, sheet: RubberSheet):
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payloads = {
        "map_georef.pcd": write_point_cloud(warped_cloud, config.pcd_encoding),
        "trajectory_georef.txt": write_plot_data(warped_traj, dev_sheet.per_point),
        "trajectory_aligned.txt": write_plot_data(aligned_odo, dev_align.per_point),
        "report.txt": render_report(report).encode(),
        "triangulation.off": sheet.triangulation.to_off().encode(),
    }
    # All payloads exist before anything touches disk; write via temp names
    # so an interrupted run cannot leave half-written outputs behind.
    for name, blob in payloads.items():
        tmp = out_dir / (name + ".tmp")
        tmp.write_bytes(blob)
    for name in payloads:
        (out_dir / (name + ".tmp")).replace(out_dir / name)
