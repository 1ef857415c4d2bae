"""Command-line interface.

Subcommands:
  georef   run the full pipeline from a config file (with flag overrides)
  eval     deviation statistics between two trajectory files
  synth    write a synthetic scenario to disk
  inspect  print a parsed summary of an input file

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import GeorefError, InputError, PipelineError
from .geodesy import EnuOrigin
from .io import parse_gnss_log, parse_odometry_poses, read_point_cloud
from .metrics import deviation_report
from .pipeline import config_from_mapping, parse_config, render_report, run_pipeline
from .synth import generate_scenario, write_scenario

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on bad usage; we reserve 2 for
    numerical failures, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mapgeoref", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)

    georef = sub.add_parser("georef", parents=[], help="run the georeferencing pipeline")
    georef.add_argument("--config", help="flat key = value config file")
    georef.add_argument("--gnss", dest="gnss_path")
    georef.add_argument("--odometry", dest="odometry_path")
    georef.add_argument("--odometry-format", dest="odometry_format", choices=("tum", "kitti"))
    georef.add_argument("--odometry-timestamps", dest="odometry_timestamps_path")
    georef.add_argument("--cloud", dest="cloud_path")
    georef.add_argument("--out", dest="output_dir")
    georef.add_argument("--enu-origin", dest="enu_origin", help="'lat lon alt' override")
    georef.add_argument("--spline-min-distance", dest="spline_min_distance_m")
    georef.add_argument("--n-cp", dest="n_cp")
    georef.add_argument("--stddev-threshold", dest="stddev_threshold_m")
    georef.add_argument("--cuboid-factor-xy", dest="cuboid_factor_xy")
    georef.add_argument("--cuboid-factor-z", dest="cuboid_factor_z")
    georef.add_argument("--pcd-encoding", dest="pcd_encoding", choices=("binary", "ascii"))

    ev = sub.add_parser("eval", help="deviation between two trajectory files")
    ev.add_argument("reference")
    ev.add_argument("estimate")
    ev.add_argument("--format", default="tum", choices=("tum",), help="trajectory file format")

    synth = sub.add_parser("synth", help="generate a synthetic scenario")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)
    synth.add_argument("--length", type=float, default=5000.0, help="loop length in meters")
    synth.add_argument("--drift", type=float, default=15.0, help="drift amplitude in meters")
    synth.add_argument("--noise", type=float, default=0.02, help="GNSS noise sigma in meters")
    synth.add_argument("--shape", default="oval", choices=("oval", "figure8"))
    synth.add_argument(
        "--outage",
        action="append",
        default=[],
        metavar="START:END",
        help="arc-length window (m) with 20x inflated GNSS stddev; repeatable",
    )

    ins = sub.add_parser("inspect", help="summarize a parsed input file")
    ins.add_argument("kind", choices=("gnss", "odometry", "cloud"))
    ins.add_argument("path")
    ins.add_argument("--format", default="tum", choices=("tum", "kitti"))
    ins.add_argument("--timestamps", help="sidecar timestamps (KITTI)")
    return parser


def _cmd_georef(args) -> int:
    values: dict[str, str] = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise InputError(f"config file not found: {args.config}")
        values = parse_config(path.read_text())
    for key in (
        "gnss_path", "odometry_path", "odometry_format", "odometry_timestamps_path",
        "cloud_path", "output_dir", "enu_origin", "spline_min_distance_m",
        "n_cp", "stddev_threshold_m", "cuboid_factor_xy", "cuboid_factor_z",
        "pcd_encoding",
    ):
        override = getattr(args, key, None)
        if override is not None:
            values[key] = override
    config = config_from_mapping(values)
    report = run_pipeline(config)
    sys.stdout.write(render_report(report))
    return 0


def _cmd_eval(args) -> int:
    ref = parse_odometry_poses(Path(args.reference).read_bytes(), args.format)
    est = parse_odometry_poses(Path(args.estimate).read_bytes(), args.format)
    dev = deviation_report(ref, est)
    print(f"points: {len(dev.per_point)}")
    print(f"mae_m: {dev.mae!r}")
    print(f"stddev_m: {dev.stddev!r}")
    print(f"max_m: {dev.max!r}")
    return 0


def _parse_outages(specs: list[str]) -> tuple[tuple[float, float], ...]:
    windows = []
    for spec in specs:
        start, sep, end = spec.partition(":")
        if not sep:
            raise InputError(f"outage window '{spec}' is not START:END")
        try:
            windows.append((float(start), float(end)))
        except ValueError:
            raise InputError(f"outage window '{spec}' has non-numeric bounds") from None
    return tuple(windows)


def _cmd_synth(args) -> int:
    scenario = generate_scenario(
        seed=args.seed,
        length_m=args.length,
        drift_amplitude_m=args.drift,
        gnss_noise_m=args.noise,
        outage_windows=_parse_outages(args.outage),
        shape=args.shape,
    )
    paths = write_scenario(scenario, args.out)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


def _cmd_inspect(args) -> int:
    data = Path(args.path).read_bytes()
    if args.kind == "gnss":
        fixes = parse_gnss_log(data)
        print(f"gnss fixes: {len(fixes)}")
        if fixes:
            print(f"time range: {fixes[0].timestamp} .. {fixes[-1].timestamp}")
            print(f"first fix: lat {fixes[0].latitude} lon {fixes[0].longitude} alt {fixes[0].altitude}")
    elif args.kind == "odometry":
        ts = Path(args.timestamps).read_bytes() if args.timestamps else None
        traj = parse_odometry_poses(data, args.format, ts)
        print(f"poses: {len(traj)}")
        print(f"time range: {traj.timestamps[0]} .. {traj.timestamps[-1]}")
        lo = traj.positions.min(axis=0)
        hi = traj.positions.max(axis=0)
        print(f"bbox: [{lo[0]:.3f}, {hi[0]:.3f}] x [{lo[1]:.3f}, {hi[1]:.3f}] x [{lo[2]:.3f}, {hi[2]:.3f}]")
    else:
        cloud = read_point_cloud(data)
        print(f"points: {len(cloud)}")
        print(f"intensity: {'yes' if cloud.intensity is not None else 'no'}")
        if len(cloud):
            lo = cloud.points.min(axis=0)
            hi = cloud.points.max(axis=0)
            print(f"bbox: [{lo[0]:.3f}, {hi[0]:.3f}] x [{lo[1]:.3f}, {hi[1]:.3f}] x [{lo[2]:.3f}, {hi[2]:.3f}]")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {
        "georef": _cmd_georef,
        "eval": _cmd_eval,
        "synth": _cmd_synth,
        "inspect": _cmd_inspect,
    }
    try:
        return handlers[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1 if isinstance(exc.cause, InputError) else 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except GeorefError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
