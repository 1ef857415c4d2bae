"""WGS84 geodetic conversions into a local East-North-Up metric frame.

All downstream math runs in meters, so raw GNSS fixes are converted
geodetic -> ECEF -> ENU. Altitude is ellipsoidal height throughout; no
geoid model is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError
from .trajectory import Trajectory

# WGS84 ellipsoid
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)


def _check_llh(lat: float, lon: float, alt: float) -> None:
    if not (math.isfinite(lat) and math.isfinite(lon) and math.isfinite(alt)):
        raise InputError("latitude/longitude/altitude must be finite")
    if not -90.0 <= lat <= 90.0:
        raise InputError(f"latitude {lat} outside [-90, 90]")
    if not -180.0 <= lon <= 180.0:
        raise InputError(f"longitude {lon} outside [-180, 180]")


@dataclass(frozen=True, eq=False)
class GeodeticPosition:
    """Raw GNSS fix: WGS84 degrees, ellipsoidal meters, per-axis 1-sigma."""

    latitude: float
    longitude: float
    altitude: float
    timestamp: float
    stddev: tuple[float, float, float]

    def __post_init__(self):
        _check_llh(self.latitude, self.longitude, self.altitude)
        if not math.isfinite(self.timestamp):
            raise InputError("timestamp must be finite")
        object.__setattr__(self, "stddev", tuple(float(s) for s in self.stddev))
        if len(self.stddev) != 3:
            raise InputError("stddev must have 3 components")
        if any(not math.isfinite(s) or s < 0 for s in self.stddev):
            raise InputError("stddev components must be finite and >= 0")


@dataclass(frozen=True)
class EnuOrigin:
    """Anchor point of the local East-North-Up frame."""

    latitude: float
    longitude: float
    altitude: float

    def __post_init__(self):
        _check_llh(self.latitude, self.longitude, self.altitude)

    @classmethod
    def from_position(cls, p: GeodeticPosition) -> "EnuOrigin":
        return cls(p.latitude, p.longitude, p.altitude)


def geodetic_to_ecef(p: GeodeticPosition | EnuOrigin) -> np.ndarray:
    """Convert a geodetic position to Earth-Centered-Earth-Fixed meters."""
    _check_llh(p.latitude, p.longitude, p.altitude)
    lat = math.radians(p.latitude)
    lon = math.radians(p.longitude)
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    sin_lon, cos_lon = math.sin(lon), math.cos(lon)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    return np.array(
        [
            (n + p.altitude) * cos_lat * cos_lon,
            (n + p.altitude) * cos_lat * sin_lon,
            (n * (1.0 - WGS84_E2) + p.altitude) * sin_lat,
        ]
    )


def _enu_rotation(origin: EnuOrigin) -> np.ndarray:
    """Rows are the east/north/up unit vectors expressed in ECEF."""
    lat = math.radians(origin.latitude)
    lon = math.radians(origin.longitude)
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    sin_lon, cos_lon = math.sin(lon), math.cos(lon)
    return np.array(
        [
            [-sin_lon, cos_lon, 0.0],
            [-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat],
            [cos_lat * cos_lon, cos_lat * sin_lon, sin_lat],
        ]
    )


def ecef_to_enu(p_ecef: np.ndarray, origin: EnuOrigin) -> np.ndarray:
    """Rotate the ECEF delta from ``origin`` into (east, north, up) meters."""
    p_ecef = np.asarray(p_ecef, dtype=np.float64)
    if not np.all(np.isfinite(p_ecef)):
        raise InputError("ECEF coordinates must be finite")
    delta = p_ecef - geodetic_to_ecef(origin)
    return _enu_rotation(origin) @ delta


def enu_to_ecef(p_enu: np.ndarray, origin: EnuOrigin) -> np.ndarray:
    """Inverse of :func:`ecef_to_enu`."""
    p_enu = np.asarray(p_enu, dtype=np.float64)
    return _enu_rotation(origin).T @ p_enu + geodetic_to_ecef(origin)


def ecef_to_geodetic(p_ecef: np.ndarray) -> tuple[float, float, float]:
    """ECEF meters back to (lat deg, lon deg, ellipsoidal alt m).

    Fixed-point iteration on the latitude; converges to well below 1e-9
    degrees for |lat| <= 89.
    """
    x, y, z = (float(v) for v in np.asarray(p_ecef, dtype=np.float64))
    lon = math.atan2(y, x)
    p = math.hypot(x, y)
    lat = math.atan2(z, p * (1.0 - WGS84_E2))
    for _ in range(12):
        sin_lat = math.sin(lat)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        new_lat = math.atan2(z + WGS84_E2 * n * sin_lat, p)
        if abs(new_lat - lat) < 1e-15:
            lat = new_lat
            break
        lat = new_lat
    sin_lat, cos_lat = math.sin(lat), math.cos(lat)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    if abs(cos_lat) > 1e-8:
        alt = p / cos_lat - n
    else:
        alt = abs(z) - WGS84_B
    return math.degrees(lat), math.degrees(lon), alt


def enu_to_geodetic(p_enu: np.ndarray, origin: EnuOrigin) -> tuple[float, float, float]:
    """ENU meters back to geodetic coordinates around ``origin``."""
    return ecef_to_geodetic(enu_to_ecef(p_enu, origin))


def project_trajectory(
    fixes: Sequence[GeodeticPosition], origin: EnuOrigin | None = None
) -> Trajectory:
    """Project GNSS fixes into an ENU frame anchored at ``origin``.

    When ``origin`` is None the first fix anchors the frame. Timestamps and
    stddev are carried through unchanged.
    """
    if len(fixes) == 0:
        raise InputError("cannot project an empty GNSS sequence")
    times = np.array([f.timestamp for f in fixes])
    steps = np.diff(times)
    if np.any(steps <= 0):
        bad = int(np.argmax(steps <= 0)) + 1
        raise InputError(f"GNSS timestamps must increase strictly; violation at index {bad}")
    if origin is None:
        origin = EnuOrigin.from_position(fixes[0])
    rot = _enu_rotation(origin)
    origin_ecef = geodetic_to_ecef(origin)
    positions = np.empty((len(fixes), 3))
    for i, f in enumerate(fixes):
        positions[i] = rot @ (geodetic_to_ecef(f) - origin_ecef)
    stddev = np.array([f.stddev for f in fixes])
    return Trajectory(times, positions, stddev)
