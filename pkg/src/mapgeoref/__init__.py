"""Georeferencing and drift correction for SLAM point-cloud maps.

The package matches a local odometry trajectory to GNSS positions via
spline interpolation, rigidly aligns the two, corrects long-term drift
with a piecewise-linear warp over a Delaunay tetrahedralization of
automatically selected control points, and reports deviation statistics.
"""

from .delaunay import OUTSIDE, Tetrahedralization, locate, tetrahedralize
from .errors import (
    DegenerateInputError,
    DuplicatePointError,
    GeorefError,
    InputError,
    InsufficientSupportError,
    NumericalError,
    OutOfRangeError,
    ParseError,
    PipelineError,
    SingularTransformError,
)
from .geodesy import (
    EnuOrigin,
    GeodeticPosition,
    ecef_to_enu,
    ecef_to_geodetic,
    enu_to_ecef,
    enu_to_geodetic,
    geodetic_to_ecef,
    project_trajectory,
)
from .interpolation import (
    MatchedTrajectories,
    SplineSegment,
    evaluate_spline,
    interpolate_trajectory,
    select_reference_frames,
)
from .io import (
    parse_gnss_log,
    parse_odometry_poses,
    read_point_cloud,
    write_gnss_log,
    write_plot_data,
    write_point_cloud,
    write_tum_poses,
)
from .metrics import DeviationReport, deviation_report
from .pipeline import PipelineConfig, RunReport, parse_config, render_report, run_pipeline
from .rigid import RigidTransform, apply_rigid, squared_fit_error, umeyama
from .rubbersheet import (
    ControlPointPair,
    RubberSheet,
    WarpStats,
    enclosing_cuboid,
    select_control_points,
    solve_transforms,
    transform_cloud,
    transform_point,
    transform_points,
    transform_trajectory,
)
from .synth import DriftField, SyntheticScenario, generate_scenario, write_scenario
from .trajectory import PointCloud, Trajectory

__version__ = "0.1.0"

__all__ = [
    "ControlPointPair",
    "DegenerateInputError",
    "DeviationReport",
    "DriftField",
    "DuplicatePointError",
    "EnuOrigin",
    "GeodeticPosition",
    "GeorefError",
    "InputError",
    "InsufficientSupportError",
    "MatchedTrajectories",
    "NumericalError",
    "OUTSIDE",
    "OutOfRangeError",
    "ParseError",
    "PipelineConfig",
    "PipelineError",
    "PointCloud",
    "RigidTransform",
    "RubberSheet",
    "RunReport",
    "SingularTransformError",
    "SplineSegment",
    "SyntheticScenario",
    "Tetrahedralization",
    "Trajectory",
    "WarpStats",
    "apply_rigid",
    "deviation_report",
    "ecef_to_enu",
    "ecef_to_geodetic",
    "enclosing_cuboid",
    "enu_to_ecef",
    "enu_to_geodetic",
    "evaluate_spline",
    "generate_scenario",
    "geodetic_to_ecef",
    "interpolate_trajectory",
    "locate",
    "parse_config",
    "parse_gnss_log",
    "parse_odometry_poses",
    "project_trajectory",
    "read_point_cloud",
    "render_report",
    "run_pipeline",
    "select_control_points",
    "select_reference_frames",
    "solve_transforms",
    "squared_fit_error",
    "tetrahedralize",
    "transform_cloud",
    "transform_point",
    "transform_points",
    "transform_trajectory",
    "umeyama",
    "write_gnss_log",
    "write_plot_data",
    "write_point_cloud",
    "write_scenario",
    "write_tum_poses",
]
