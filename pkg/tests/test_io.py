import numpy as np
import pytest

from mapgeoref import (
    InputError,
    ParseError,
    PointCloud,
    Trajectory,
    parse_gnss_log,
    parse_odometry_poses,
    read_point_cloud,
    write_gnss_log,
    write_plot_data,
    write_point_cloud,
    write_tum_poses,
)


class TestGnssLog:
    def test_single_line(self):
        fixes = parse_gnss_log(b"100.0 48.0 11.0 500.0 0.02 0.02 0.05\n")
        assert len(fixes) == 1
        f = fixes[0]
        assert (f.timestamp, f.latitude, f.longitude, f.altitude) == (100.0, 48.0, 11.0, 500.0)
        assert f.stddev == (0.02, 0.02, 0.05)

    def test_empty_file_warns(self):
        with pytest.warns(UserWarning):
            assert parse_gnss_log(b"") == []

    def test_comments_skipped_order_preserved(self):
        data = b"# header\n1 48 11 500 0 0 0\n# middle\n2 48.1 11.1 501 0 0 0\n"
        fixes = parse_gnss_log(data)
        assert [f.timestamp for f in fixes] == [1.0, 2.0]

    def test_malformed_field_names_location(self):
        with pytest.raises(ParseError, match=r"line 2, field 3"):
            parse_gnss_log(b"1 48 11 500 0 0 0\n2 48 xx 500 0 0 0\n")

    def test_out_of_range_latitude(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_gnss_log(b"1 95 11 500 0 0 0\n")

    def test_wrong_field_count(self):
        with pytest.raises(ParseError, match="expected 7"):
            parse_gnss_log(b"1 48 11 500 0 0\n")

    def test_writer_round_trip(self):
        fixes = parse_gnss_log(b"1 48.123456789 11.5 500.25 0.02 0.03 0.05\n")
        again = parse_gnss_log(write_gnss_log(fixes))
        assert again[0].latitude == fixes[0].latitude
        assert again[0].stddev == fixes[0].stddev


class TestOdometryPoses:
    def test_kitti_translation_column(self):
        poses = b"1 0 0 5 0 1 0 -2 0 0 1 0.5\n"
        traj = parse_odometry_poses(poses, "kitti", timestamps=b"0.0\n")
        assert np.allclose(traj.positions[0], (5, -2, 0.5))

    def test_kitti_requires_timestamps(self):
        with pytest.raises(InputError, match="timestamp"):
            parse_odometry_poses(b"1 0 0 0 0 1 0 0 0 0 1 0\n", "kitti")

    def test_kitti_row_length_mismatch(self):
        with pytest.raises(ParseError, match="expected 12"):
            parse_odometry_poses(b"1 0 0 5\n", "kitti", timestamps=b"0\n")

    def test_kitti_timestamp_count_mismatch(self):
        with pytest.raises(ParseError, match="does not match"):
            parse_odometry_poses(
                b"1 0 0 5 0 1 0 -2 0 0 1 0.5\n", "kitti", timestamps=b"0\n1\n"
            )

    def test_tum_basic(self):
        traj = parse_odometry_poses(b"0.0 0 0 0 0 0 0 1\n", "tum")
        assert traj.timestamps[0] == 0.0
        assert np.allclose(traj.positions[0], (0, 0, 0))

    def test_tum_decreasing_timestamps_names_line(self):
        data = b"0.0 0 0 0 0 0 0 1\n-1.0 1 0 0 0 0 0 1\n2.0 2 0 0 0 0 0 1\n"
        with pytest.raises(ParseError, match="line 2"):
            parse_odometry_poses(data, "tum")

    def test_tum_non_unit_quaternion(self):
        with pytest.raises(ParseError, match="quaternion"):
            parse_odometry_poses(b"0.0 0 0 0 0 0 0 1.01\n", "tum")

    def test_unknown_format(self):
        with pytest.raises(InputError, match="unknown odometry format"):
            parse_odometry_poses(b"", "bag")

    def test_kitti_tum_same_motion_identical(self):
        rng = np.random.default_rng(3)
        positions = rng.uniform(-50, 50, (20, 3))
        times = np.arange(20.0)
        kitti_lines = []
        tum_lines = []
        for t, p in zip(times, positions):
            x, y, z = (repr(float(v)) for v in p)
            kitti_lines.append(f"1 0 0 {x} 0 1 0 {y} 0 0 1 {z}")
            tum_lines.append(f"{float(t)!r} {x} {y} {z} 0 0 0 1")
        a = parse_odometry_poses(
            "\n".join(kitti_lines).encode(),
            "kitti",
            timestamps="\n".join(repr(float(t)) for t in times).encode(),
        )
        b = parse_odometry_poses("\n".join(tum_lines).encode(), "tum")
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.timestamps, b.timestamps)

    def test_tum_writer_round_trip(self):
        traj = Trajectory(np.arange(3.0), np.arange(9.0).reshape(3, 3) * 0.37)
        again = parse_odometry_poses(write_tum_poses(traj), "tum")
        assert np.array_equal(again.positions, traj.positions)
        assert np.array_equal(again.timestamps, traj.timestamps)


class TestPointCloud:
    def test_ascii_two_points_bit_equal(self):
        data = (
            b"VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n"
            b"WIDTH 2\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 2\nDATA ascii\n"
            b"1.5 2.25 3.0\n-0.5 0.125 10.0\n"
        )
        pc = read_point_cloud(data)
        assert pc.points.tolist() == [[1.5, 2.25, 3.0], [-0.5, 0.125, 10.0]]
        assert pc.source_dtype == np.float32

    def test_binary_round_trip_body_identical(self):
        rng = np.random.default_rng(0)
        pc = PointCloud(rng.uniform(-100, 100, (57, 3)).astype(np.float32))
        blob = write_point_cloud(pc, "binary")
        again = read_point_cloud(blob)
        blob2 = write_point_cloud(again, "binary")
        body = blob.split(b"DATA binary\n", 1)[1]
        body2 = blob2.split(b"DATA binary\n", 1)[1]
        assert body == body2

    def test_ascii_round_trip_1000_random_float32_exact(self):
        rng = np.random.default_rng(1)
        pts = rng.uniform(-1000, 1000, (1000, 3)).astype(np.float32)
        pc = PointCloud(pts)
        again = read_point_cloud(write_point_cloud(pc, "ascii"))
        assert np.array_equal(again.points.astype(np.float32), pts)
        assert np.max(np.abs(again.points - pc.points)) == 0.0

    def test_float64_round_trips_both_encodings(self):
        rng = np.random.default_rng(2)
        pc = PointCloud(rng.standard_normal((40, 3)), source_dtype=np.float64)
        for enc in ("ascii", "binary"):
            again = read_point_cloud(write_point_cloud(pc, enc))
            assert np.array_equal(again.points, pc.points)
            assert again.source_dtype == np.float64

    def test_intensity_carried(self):
        pc = PointCloud([[1, 2, 3]], intensity=[7.5])
        again = read_point_cloud(write_point_cloud(pc, "binary"))
        assert again.intensity is not None
        assert again.intensity[0] == 7.5

    def test_empty_cloud_valid_header(self):
        blob = write_point_cloud(PointCloud(np.empty((0, 3))), "ascii")
        assert b"POINTS 0" in blob
        assert len(read_point_cloud(blob)) == 0

    def test_one_point_ascii_single_data_line(self):
        blob = write_point_cloud(PointCloud([[1, 2, 3]]), "ascii")
        body = blob.split(b"DATA ascii\n", 1)[1]
        assert body.count(b"\n") == 1

    def test_truncated_binary_reports_byte_counts(self):
        blob = write_point_cloud(PointCloud([[1, 2, 3], [4, 5, 6]]), "binary")
        with pytest.raises(ParseError, match=r"expected 24 bytes, got 23"):
            read_point_cloud(blob[:-1])

    def test_unknown_fields_ignored_with_warning(self):
        data = (
            b"VERSION 0.7\nFIELDS x y z ring\nSIZE 4 4 4 2\nTYPE F F F U\nCOUNT 1 1 1 1\n"
            b"WIDTH 1\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 1\nDATA ascii\n"
            b"1.0 2.0 3.0 9\n"
        )
        with pytest.warns(UserWarning, match="ring"):
            pc = read_point_cloud(data)
        assert np.allclose(pc.points[0], (1, 2, 3))

    def test_unsupported_xyz_type(self):
        data = (
            b"VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE U F F\nCOUNT 1 1 1\n"
            b"WIDTH 1\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 1\nDATA ascii\n1 2 3\n"
        )
        with pytest.raises(ParseError, match="unsupported field type"):
            read_point_cloud(data)

    def test_ascii_body_line_count_mismatch(self):
        data = (
            b"VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n"
            b"WIDTH 3\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 3\nDATA ascii\n1 2 3\n"
        )
        with pytest.raises(ParseError, match="header says POINTS 3"):
            read_point_cloud(data)

    def test_plain_xyz_text(self):
        pc = read_point_cloud(b"# cloud\n1 2 3\n4 5 6\n")
        assert pc.points.tolist() == [[1, 2, 3], [4, 5, 6]]
        assert pc.source_dtype == np.float64

    def test_binary_cloud_with_skipped_field(self):
        # x y z plus an extra float column that must be byte-skipped
        header = (
            b"VERSION 0.7\nFIELDS x y z extra\nSIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\n"
            b"WIDTH 2\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 2\nDATA binary\n"
        )
        body = np.array([[1, 2, 3, 99], [4, 5, 6, 98]], dtype="<f4").tobytes()
        with pytest.warns(UserWarning):
            pc = read_point_cloud(header + body)
        assert np.allclose(pc.points, [[1, 2, 3], [4, 5, 6]])


class TestPlotData:
    def test_single_row(self):
        traj = Trajectory([0.0], [[1.0, 2.0, 3.0]])
        assert write_plot_data(traj, [0.5]) == b"1.0 2.0 3.0 0.5\n"

    def test_empty(self):
        traj = Trajectory(np.empty(0), np.empty((0, 3)))
        assert write_plot_data(traj, np.empty(0)) == b""

    def test_row_count_matches(self):
        rng = np.random.default_rng(4)
        n = 37
        traj = Trajectory(np.arange(float(n)), rng.standard_normal((n, 3)))
        blob = write_plot_data(traj, rng.standard_normal(n))
        assert blob.count(b"\n") == n
        assert all(len(line.split()) == 4 for line in blob.strip().splitlines())

    def test_length_mismatch(self):
        traj = Trajectory([0.0], [[1, 2, 3]])
        with pytest.raises(InputError):
            write_plot_data(traj, [1.0, 2.0])
