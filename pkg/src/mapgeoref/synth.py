"""Synthetic ground-truth scenarios for exercising the full pipeline.

A scenario provides everything the pipeline consumes (GNSS log, odometry
trajectory, point cloud) plus the ground truth it normally lacks: a smooth
closed loop, a spatially smooth low-frequency drift field that corrupts
the odometry the way long-term scan-registration drift corrupts a SLAM
map, GNSS fixes with Gaussian noise and optional stddev-inflated outage
windows, and a point cloud scattered around the path that drifts with it.
Everything is deterministic per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .geodesy import EnuOrigin, GeodeticPosition, enu_to_geodetic
from .io import write_gnss_log, write_point_cloud, write_tum_poses
from .rigid import RigidTransform, transform_points
from .trajectory import PointCloud, Trajectory

DEFAULT_ORIGIN = EnuOrigin(48.0, 11.0, 500.0)

# Drift wavelengths as fractions of the loop length, and their weights.
# Long wavelengths keep the field's gradient within the documented
# continuity bound (10 * amplitude * spacing / length) with margin.
_DRIFT_WAVELENGTH_FRACTIONS = (1.6, 0.8, 0.68)
_DRIFT_WEIGHTS = (0.25, 0.35, 0.40)
# Safety factor between the realized along-path gradient and the
# continuity bound; the scale backs off when a phase draw is too steep.
_CONTINUITY_MARGIN = 1.25


@dataclass
class DriftField:
    """Smooth spatial vector field: three directed sinusoids."""

    amplitude: float
    directions: np.ndarray  # (3, 3) unit displacement directions
    wave_vectors: np.ndarray  # (3, 3) unit spatial variation directions
    wavelengths: np.ndarray  # (3,)
    phases: np.ndarray  # (3,)
    weights: np.ndarray  # (3,)
    scale: float = 1.0

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = pts.reshape(-1, 3)
        out = np.zeros_like(pts)
        for k in range(3):
            phase = 2.0 * np.pi * (pts @ self.wave_vectors[k]) / self.wavelengths[k]
            out += self.weights[k] * np.sin(phase + self.phases[k])[:, None] * self.directions[k][None, :]
        out *= self.scale
        return out[0] if single else out


@dataclass
class SyntheticScenario:
    """Pipeline inputs plus the ground truth they were generated from."""

    ground_truth: Trajectory
    gnss: list[GeodeticPosition]
    odometry: Trajectory
    cloud: PointCloud
    cloud_truth: PointCloud
    drift_amplitude: float
    origin: EnuOrigin
    corridor_radius: float
    outage_windows: tuple[tuple[float, float], ...]
    arc_positions: np.ndarray  # odometry keyframes' arc length along the loop
    dereference: RigidTransform  # global -> local map applied to the odometry
    drift: DriftField


def _stadium_path(s: np.ndarray, length: float) -> np.ndarray:
    """Closed stadium loop (two straights, two semicircle arcs) at arc s."""
    r = length / 10.0
    straight = (length - 2.0 * math.pi * r) / 2.0
    s = np.mod(s, length)
    x = np.empty_like(s)
    y = np.empty_like(s)
    for i, si in enumerate(s):
        if si < straight:  # bottom straight, heading +x
            x[i] = -straight / 2.0 + si
            y[i] = -r
        elif si < straight + math.pi * r:  # right arc
            ang = -math.pi / 2.0 + (si - straight) / r
            x[i] = straight / 2.0 + r * math.cos(ang)
            y[i] = r * math.sin(ang)
        elif si < 2.0 * straight + math.pi * r:  # top straight, heading -x
            x[i] = straight / 2.0 - (si - straight - math.pi * r)
            y[i] = r
        else:  # left arc
            ang = math.pi / 2.0 + (si - 2.0 * straight - math.pi * r) / r
            x[i] = -straight / 2.0 + r * math.cos(ang)
            y[i] = r * math.sin(ang)
    return np.stack([x, y], axis=1)


def _figure_eight_path(s: np.ndarray, length: float) -> np.ndarray:
    """Closed figure-eight, resampled to (approximately) uniform arc length."""
    theta = np.linspace(0.0, 2.0 * np.pi, 4096, endpoint=False)
    a = length / 6.1  # empirical: perimeter of this lemniscate ~ 6.1 a
    xy = np.stack([a * np.sin(theta), a * np.sin(theta) * np.cos(theta)], axis=1)
    seg = np.linalg.norm(np.diff(np.vstack([xy, xy[:1]]), axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    s = np.mod(np.asarray(s, dtype=np.float64), length) * (total / length)
    x = np.interp(s, cum, np.concatenate([xy[:, 0], xy[:1, 0]]))
    y = np.interp(s, cum, np.concatenate([xy[:, 1], xy[:1, 1]]))
    return np.stack([x, y], axis=1)


def _path_points(s: np.ndarray, length: float, shape: str, z_amplitude: float) -> np.ndarray:
    if shape == "oval":
        xy = _stadium_path(s, length)
    elif shape == "figure8":
        xy = _figure_eight_path(s, length)
    else:
        raise InputError(f"unknown loop shape '{shape}' (expected 'oval' or 'figure8')")
    z = z_amplitude * np.sin(2.0 * np.pi * s / length)
    return np.concatenate([xy, z[:, None]], axis=1)


def _random_unit_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation from a normalized random quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _build_drift(
    rng: np.random.Generator, amplitude: float, length: float, path_samples: np.ndarray
) -> DriftField:
    """Random field rescaled so its path maximum hits ``amplitude`` while
    adjacent-sample deltas stay within the continuity bound
    (10 * amplitude * spacing / length) with margin."""
    field = DriftField(
        amplitude=amplitude,
        directions=_random_unit_vectors(rng, 3),
        wave_vectors=_random_unit_vectors(rng, 3),
        wavelengths=np.array(_DRIFT_WAVELENGTH_FRACTIONS) * length,
        phases=rng.uniform(0.0, 2.0 * np.pi, 3),
        weights=np.array(_DRIFT_WEIGHTS),
        scale=1.0,
    )
    if amplitude == 0.0:
        field.scale = 0.0
        return field
    raw = field(path_samples)
    raw_peak = float(np.linalg.norm(raw, axis=1).max())
    deltas = np.linalg.norm(np.diff(raw, axis=0), axis=1)
    spacing = np.linalg.norm(np.diff(path_samples, axis=0), axis=1)
    steep = float(np.max(deltas * length / (10.0 * spacing)))
    field.scale = amplitude / max(raw_peak, _CONTINUITY_MARGIN * steep, 1e-30)
    return field


def generate_scenario(
    seed: int,
    length_m: float = 5000.0,
    drift_amplitude_m: float = 15.0,
    gnss_noise_m: float = 0.02,
    outage_windows: tuple[tuple[float, float], ...] = (),
    shape: str = "oval",
    odometry_spacing_m: float = 2.0,
    gnss_spacing_m: float = 2.5,
    cloud_points: int = 4000,
    cloud_offset_m: float = 10.0,
    speed_mps: float = 10.0,
    z_amplitude_m: float = 10.0,
    origin: EnuOrigin = DEFAULT_ORIGIN,
) -> SyntheticScenario:
    """Generate a deterministic drive around a closed loop.

    ``outage_windows`` are (start, end) arc-length intervals in meters; GNSS
    fixes inside them get their reported stddev inflated 20x while their
    positions stay untouched.
    """
    if length_m <= 0 or odometry_spacing_m <= 0 or gnss_spacing_m <= 0 or speed_mps <= 0:
        raise InputError("scenario dimensions must be positive")
    if drift_amplitude_m < 0 or gnss_noise_m < 0:
        raise InputError("drift amplitude and GNSS noise must be >= 0")
    rng = np.random.default_rng(seed)

    # GNSS covers the whole loop; odometry keeps a margin inside it so every
    # keyframe has spline support on both sides.
    margin = 8.0 * gnss_spacing_m
    s_gnss = np.arange(0.0, length_m + gnss_spacing_m / 2.0, gnss_spacing_m)
    s_odo = np.arange(margin, length_m - margin, odometry_spacing_m)

    gt_odo = _path_points(s_odo, length_m, shape, z_amplitude_m)
    gt_gnss = _path_points(s_gnss, length_m, shape, z_amplitude_m)

    drift = _build_drift(rng, drift_amplitude_m, length_m, gt_odo)
    dereference = RigidTransform(
        _random_rotation(rng), rng.uniform(-200.0, 200.0, 3), 1.0
    )

    t_odo = s_odo / speed_mps
    t_gnss = s_gnss / speed_mps

    odo_positions = transform_points(dereference, gt_odo + drift(gt_odo))
    ground_truth = Trajectory(t_odo, gt_odo)
    odometry = Trajectory(t_odo, odo_positions)

    noise = rng.normal(0.0, gnss_noise_m, gt_gnss.shape) if gnss_noise_m > 0 else np.zeros_like(gt_gnss)
    gnss_enu = gt_gnss + noise
    fixes = []
    for i, s in enumerate(s_gnss):
        sigma = gnss_noise_m
        for lo, hi in outage_windows:
            if lo <= s <= hi:
                sigma = gnss_noise_m * 20.0
                break
        lat, lon, alt = enu_to_geodetic(gnss_enu[i], origin)
        fixes.append(GeodeticPosition(lat, lon, alt, float(t_gnss[i]), (sigma, sigma, sigma)))

    s_cloud = rng.uniform(s_odo[0], s_odo[-1], cloud_points)
    offsets = rng.normal(size=(cloud_points, 3))
    offsets *= (rng.uniform(0.0, cloud_offset_m, cloud_points) / np.linalg.norm(offsets, axis=1))[:, None]
    cloud_truth_pts = _path_points(s_cloud, length_m, shape, z_amplitude_m) + offsets
    cloud_local = transform_points(dereference, cloud_truth_pts + drift(cloud_truth_pts))

    return SyntheticScenario(
        ground_truth=ground_truth,
        gnss=fixes,
        odometry=odometry,
        cloud=PointCloud(cloud_local),
        cloud_truth=PointCloud(cloud_truth_pts),
        drift_amplitude=drift_amplitude_m,
        origin=origin,
        corridor_radius=cloud_offset_m + 2.0 + 0.05 * drift_amplitude_m,
        outage_windows=tuple(tuple(w) for w in outage_windows),
        arc_positions=s_odo,
        dereference=dereference,
        drift=drift,
    )


def write_scenario(scenario: SyntheticScenario, directory) -> dict[str, Path]:
    """Write the pipeline input files (plus ground truth) into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {
        "gnss": directory / "gnss.txt",
        "odometry": directory / "odometry_tum.txt",
        "cloud": directory / "cloud.pcd",
        "ground_truth": directory / "ground_truth_tum.txt",
    }
    paths["gnss"].write_bytes(write_gnss_log(scenario.gnss))
    paths["odometry"].write_bytes(write_tum_poses(scenario.odometry))
    paths["cloud"].write_bytes(write_point_cloud(scenario.cloud, "binary"))
    paths["ground_truth"].write_bytes(write_tum_poses(scenario.ground_truth))
    return paths
