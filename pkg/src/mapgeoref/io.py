"""Parsers and writers for the pipeline's on-disk formats.

Formats:
  - GNSS log: UTF-8 text, ``#`` comments, 7 floats per line
    (``timestamp lat lon alt sd_e sd_n sd_u``).
  - Odometry poses: KITTI 12-float rows (plus a mandatory sidecar timestamp
    file, one float per line) or TUM ``t x y z qx qy qz qw`` rows.
  - Point clouds: PCD v0.7 ASCII/binary (little-endian), or plain
    ``x y z`` text.
  - Plot data: 4-column text ``x y z meta``.

Parsers reject malformed input instead of repairing it; every error names
the offending line (and field where that makes sense).
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import InputError, ParseError
from .geodesy import GeodeticPosition
from .trajectory import PointCloud, Trajectory

_PCD_HEADER_KEYS = (
    "VERSION",
    "FIELDS",
    "SIZE",
    "TYPE",
    "COUNT",
    "WIDTH",
    "HEIGHT",
    "VIEWPOINT",
    "POINTS",
    "DATA",
)


def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not valid UTF-8 text: {exc}") from None


def _data_lines(text: str):
    """Yield (1-based line number, stripped content) skipping comments/blanks."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, stripped


def _parse_floats(line: str, lineno: int, expected: int, what: str) -> list[float]:
    tokens = line.split()
    if len(tokens) != expected:
        raise ParseError(
            f"{what}: expected {expected} fields, got {len(tokens)}", line=lineno
        )
    values = []
    for col, tok in enumerate(tokens, start=1):
        try:
            values.append(float(tok))
        except ValueError:
            raise ParseError(f"{what}: '{tok}' is not a number", line=lineno, column=col) from None
    return values


def parse_gnss_log(data: bytes) -> list[GeodeticPosition]:
    """Parse a GNSS log into raw fixes, one per non-comment line."""
    text = _decode(data)
    fixes: list[GeodeticPosition] = []
    for lineno, line in _data_lines(text):
        t, lat, lon, alt, sd_e, sd_n, sd_u = _parse_floats(line, lineno, 7, "GNSS record")
        if not -90.0 <= lat <= 90.0:
            raise ParseError(f"latitude {lat} outside [-90, 90]", line=lineno, column=2)
        if not -180.0 <= lon <= 180.0:
            raise ParseError(f"longitude {lon} outside [-180, 180]", line=lineno, column=3)
        try:
            fixes.append(GeodeticPosition(lat, lon, alt, t, (sd_e, sd_n, sd_u)))
        except InputError as exc:
            raise ParseError(str(exc), line=lineno) from None
    if not fixes:
        warnings.warn("GNSS log contains no data lines", stacklevel=2)
    return fixes


def write_gnss_log(fixes: list[GeodeticPosition]) -> bytes:
    """Serialize fixes in the log format parse_gnss_log reads."""
    lines = ["# timestamp lat_deg lon_deg alt_m sd_e_m sd_n_m sd_u_m"]
    for f in fixes:
        vals = (f.timestamp, f.latitude, f.longitude, f.altitude, *f.stddev)
        lines.append(" ".join(repr(float(v)) for v in vals))
    return ("\n".join(lines) + "\n").encode()


def _check_monotonic(times: list[float], linenos: list[int], what: str) -> None:
    for i in range(1, len(times)):
        if times[i] <= times[i - 1]:
            raise ParseError(
                f"{what}: timestamp {times[i]} does not increase past {times[i - 1]}",
                line=linenos[i],
            )


def parse_odometry_poses(
    data: bytes, fmt: str, timestamps: bytes | None = None
) -> Trajectory:
    """Parse odometry pose files; only translations are kept.

    ``fmt`` is 'kitti' (12 floats per row, row-major 3x4 pose; the sidecar
    ``timestamps`` bytes are mandatory) or 'tum' (``t x y z qx qy qz qw``).
    Rotations are discarded: downstream stages operate on positions.
    """
    if fmt == "kitti":
        if timestamps is None:
            raise InputError("KITTI pose files need a sidecar timestamp file")
        positions = []
        pose_lines = []
        for lineno, line in _data_lines(_decode(data)):
            row = _parse_floats(line, lineno, 12, "KITTI pose")
            positions.append((row[3], row[7], row[11]))
            pose_lines.append(lineno)
        times = []
        time_lines = []
        for lineno, line in _data_lines(_decode(timestamps)):
            (t,) = _parse_floats(line, lineno, 1, "KITTI timestamp")
            times.append(t)
            time_lines.append(lineno)
        if len(times) != len(positions):
            raise ParseError(
                f"timestamp count {len(times)} does not match pose count {len(positions)}"
            )
        _check_monotonic(times, time_lines, "KITTI timestamps")
        return Trajectory(np.array(times), np.array(positions).reshape(-1, 3))
    if fmt == "tum":
        positions = []
        times = []
        linenos = []
        for lineno, line in _data_lines(_decode(data)):
            t, x, y, z, qx, qy, qz, qw = _parse_floats(line, lineno, 8, "TUM pose")
            norm = math.sqrt(qx * qx + qy * qy + qz * qz + qw * qw)
            if abs(norm - 1.0) > 1e-3:
                raise ParseError(f"quaternion norm {norm:.6f} deviates from 1", line=lineno)
            times.append(t)
            positions.append((x, y, z))
            linenos.append(lineno)
        _check_monotonic(times, linenos, "TUM poses")
        return Trajectory(np.array(times), np.array(positions).reshape(-1, 3))
    raise InputError(f"unknown odometry format '{fmt}' (expected 'kitti' or 'tum')")


def write_tum_poses(traj: Trajectory) -> bytes:
    """Serialize trajectory positions as TUM rows with identity orientation."""
    lines = []
    for t, p in zip(traj.timestamps, traj.positions):
        lines.append(
            " ".join(repr(float(v)) for v in (t, p[0], p[1], p[2])) + " 0 0 0 1"
        )
    return ("\n".join(lines) + "\n").encode() if lines else b""


def _float_repr(value, dtype: np.dtype) -> str:
    # shortest decimal that round-trips at the stored width
    if dtype == np.dtype(np.float32):
        return np.format_float_positional(np.float32(value), unique=True, trim="0")
    return repr(float(value))


def _parse_pcd_header(data: bytes):
    """Return (header dict, byte offset of the body)."""
    header: dict[str, list[str]] = {}
    offset = 0
    lineno = 0
    while offset < len(data):
        end = data.find(b"\n", offset)
        if end < 0:
            end = len(data)
        raw = data[offset:end]
        offset = end + 1
        lineno += 1
        try:
            line = raw.decode("ascii").strip()
        except UnicodeDecodeError:
            raise ParseError("PCD header contains non-ASCII bytes", line=lineno) from None
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        key = key.upper()
        if key not in _PCD_HEADER_KEYS:
            raise ParseError(f"unknown PCD header entry '{key}'", line=lineno)
        header[key] = rest.split()
        if key == "DATA":
            return header, offset
    raise ParseError("PCD header has no DATA line")


def _looks_like_pcd(data: bytes) -> bool:
    head = data[:512].lstrip()
    return head.startswith(b"# .PCD") or head.startswith(b"VERSION") or head.startswith(b"FIELDS")


def _pcd_field_layout(header: dict[str, list[str]]):
    fields = header.get("FIELDS")
    if not fields:
        raise ParseError("PCD header is missing FIELDS")
    n = len(fields)
    sizes = [int(s) for s in header.get("SIZE", ["4"] * n)]
    types = header.get("TYPE", ["F"] * n)
    counts = [int(c) for c in header.get("COUNT", ["1"] * n)]
    if not (len(sizes) == len(types) == len(counts) == n):
        raise ParseError("PCD SIZE/TYPE/COUNT lengths do not match FIELDS")
    try:
        points = int(header["POINTS"][0])
    except (KeyError, IndexError, ValueError):
        raise ParseError("PCD header is missing a valid POINTS entry") from None
    for axis in ("x", "y", "z"):
        if axis not in fields:
            raise ParseError(f"PCD FIELDS lacks required '{axis}'")
        i = fields.index(axis)
        if types[i] != "F" or sizes[i] not in (4, 8) or counts[i] != 1:
            raise ParseError(
                f"unsupported field type for '{axis}': TYPE {types[i]} SIZE {sizes[i]} COUNT {counts[i]}"
            )
    known = {"x", "y", "z", "intensity"}
    ignored = [f for f in fields if f not in known]
    if ignored:
        warnings.warn(f"ignoring PCD fields: {' '.join(ignored)}", stacklevel=3)
    return fields, sizes, types, counts, points


_NP_TYPE = {("F", 4): "<f4", ("F", 8): "<f8", ("U", 1): "<u1", ("U", 2): "<u2",
            ("U", 4): "<u4", ("U", 8): "<u8", ("I", 1): "<i1", ("I", 2): "<i2",
            ("I", 4): "<i4", ("I", 8): "<i8"}


def read_point_cloud(data: bytes) -> PointCloud:
    """Read a PCD v0.7 (ASCII or binary) or plain-xyz-text point cloud."""
    if not _looks_like_pcd(data):
        return _read_xyz_text(data)
    header, body_start = _parse_pcd_header(data)
    fields, sizes, types, counts, points = _pcd_field_layout(header)
    mode = header["DATA"][0].lower() if header["DATA"] else ""
    if mode == "ascii":
        return _read_pcd_ascii(data[body_start:], fields, sizes, types, counts, points)
    if mode == "binary":
        return _read_pcd_binary(data[body_start:], fields, sizes, types, counts, points)
    raise ParseError(f"unsupported PCD DATA mode '{mode}'")


def _xyz_dtype(sizes, fields) -> np.dtype:
    return np.dtype(np.float64) if sizes[fields.index("x")] == 8 else np.dtype(np.float32)


def _read_pcd_ascii(body: bytes, fields, sizes, types, counts, points) -> PointCloud:
    text = _decode(body)
    token_count = sum(counts)
    idx = {f: sum(counts[:i]) for i, f in enumerate(fields)}
    rows = [(lineno, line) for lineno, line in _data_lines(text)]
    if len(rows) != points:
        raise ParseError(f"PCD body has {len(rows)} data lines, header says POINTS {points}")
    dtype = _xyz_dtype(sizes, fields)
    xyz = np.empty((points, 3))
    intensity = np.empty(points) if "intensity" in fields else None
    for row, (lineno, line) in enumerate(rows):
        vals = _parse_floats(line, lineno, token_count, "PCD point")
        xyz[row] = (vals[idx["x"]], vals[idx["y"]], vals[idx["z"]])
        if intensity is not None:
            intensity[row] = vals[idx["intensity"]]
    if dtype == np.dtype(np.float32):
        # Stored width is what the file declares; widen after the cast so a
        # rewrite reproduces the same float32 values.
        xyz = xyz.astype(np.float32).astype(np.float64)
        if intensity is not None:
            intensity = intensity.astype(np.float32).astype(np.float64)
    return PointCloud(xyz, intensity, dtype)


def _read_pcd_binary(body: bytes, fields, sizes, types, counts, points) -> PointCloud:
    offsets = {}
    step = 0
    for f, s, t, c in zip(fields, sizes, types, counts):
        offsets[f] = (step, t, s)
        step += s * c
    expected = step * points
    if len(body) != expected:
        raise ParseError(f"PCD binary body: expected {expected} bytes, got {len(body)}")
    raw = np.frombuffer(body, dtype=np.uint8).reshape(points, step) if points else np.empty((0, step), np.uint8)

    def column(name):
        off, t, s = offsets[name]
        key = (t, s)
        if key not in _NP_TYPE:
            raise ParseError(f"unsupported field type for '{name}': TYPE {t} SIZE {s}")
        return raw[:, off : off + s].copy().view(np.dtype(_NP_TYPE[key])).reshape(points)

    xyz = np.stack([column("x"), column("y"), column("z")], axis=1).astype(np.float64) if points else np.empty((0, 3))
    intensity = column("intensity").astype(np.float64) if "intensity" in fields and points else (
        np.empty(0) if "intensity" in fields else None
    )
    return PointCloud(xyz, intensity, _xyz_dtype(sizes, fields))


def _read_xyz_text(data: bytes) -> PointCloud:
    text = _decode(data)
    rows = []
    for lineno, line in _data_lines(text):
        rows.append(_parse_floats(line, lineno, 3, "XYZ point"))
    if not rows:
        warnings.warn("point cloud text contains no data lines", stacklevel=3)
    pts = np.array(rows, dtype=np.float64).reshape(-1, 3)
    return PointCloud(pts, None, np.float64)


def write_point_cloud(pc: PointCloud, encoding: str = "binary") -> bytes:
    """Serialize a cloud as PCD v0.7 in the requested encoding."""
    if encoding not in ("ascii", "binary"):
        raise InputError(f"unknown PCD encoding '{encoding}'")
    dtype = pc.source_dtype
    size = dtype.itemsize
    fields = ["x", "y", "z"] + (["intensity"] if pc.intensity is not None else [])
    n_fields = len(fields)
    n = len(pc)
    header = "\n".join(
        [
            "# .PCD v0.7 - Point Cloud Data file format",
            "VERSION 0.7",
            "FIELDS " + " ".join(fields),
            "SIZE " + " ".join([str(size)] * n_fields),
            "TYPE " + " ".join(["F"] * n_fields),
            "COUNT " + " ".join(["1"] * n_fields),
            f"WIDTH {n}",
            "HEIGHT 1",
            "VIEWPOINT 0 0 0 1 0 0 0",
            f"POINTS {n}",
            f"DATA {encoding}",
        ]
    ) + "\n"
    columns = [pc.points[:, 0], pc.points[:, 1], pc.points[:, 2]]
    if pc.intensity is not None:
        columns.append(pc.intensity)
    if encoding == "ascii":
        lines = []
        for row in range(n):
            lines.append(" ".join(_float_repr(col[row], dtype) for col in columns))
        body = ("\n".join(lines) + "\n") if lines else ""
        return header.encode() + body.encode()
    packed = np.empty((n, n_fields), dtype=np.dtype(f"<f{size}"))
    for j, col in enumerate(columns):
        packed[:, j] = col.astype(dtype)
    return header.encode() + packed.tobytes()


def write_plot_data(traj: Trajectory, meta: np.ndarray) -> bytes:
    """4-column ``x y z meta`` export used by the deviation plots."""
    meta = np.asarray(meta, dtype=np.float64).reshape(-1)
    if len(meta) != len(traj):
        raise InputError(
            f"meta length {len(meta)} does not match trajectory length {len(traj)}"
        )
    lines = []
    for p, m in zip(traj.positions, meta):
        lines.append(" ".join(repr(float(v)) for v in (p[0], p[1], p[2], m)))
    return ("\n".join(lines) + "\n").encode() if lines else b""
