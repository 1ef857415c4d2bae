import numpy as np
import pytest

from mapgeoref import (
    InputError,
    InsufficientSupportError,
    OutOfRangeError,
    SplineSegment,
    Trajectory,
    evaluate_spline,
    interpolate_trajectory,
    select_reference_frames,
)


def lagrange_oracle(points, times, u):
    """Independent cubic interpolation: Lagrange basis through 4 nodes."""
    result = np.zeros(3)
    for i in range(4):
        w = 1.0
        for j in range(4):
            if j != i:
                w *= (u - times[j]) / (times[i] - times[j])
        result += w * points[i]
    return result


def traj(times, positions, stddev=None):
    return Trajectory(np.asarray(times, float), np.asarray(positions, float), stddev)


def spaced_gnss(n=8, step=10.0):
    t = np.arange(n, dtype=float)
    pos = np.stack([t * step, np.zeros(n), np.zeros(n)], axis=1)
    return traj(t, pos)


class TestSelectReferenceFrames:
    def test_four_frames_affine_normalization(self):
        gnss = spaced_gnss(4)
        seg = select_reference_frames(gnss, 1.5, d_min=0.5)
        assert np.allclose(seg.reference_times, (0, 1 / 3, 2 / 3, 1))
        assert np.allclose(seg.reference_points, gnss.positions)
        assert seg.normalize_time(1.5) == pytest.approx(0.5)

    def test_out_of_range(self):
        gnss = spaced_gnss(4)
        with pytest.raises(OutOfRangeError):
            select_reference_frames(gnss, 5.0, d_min=0.5)
        with pytest.raises(OutOfRangeError):
            select_reference_frames(gnss, -0.5, d_min=0.5)

    def test_stop_and_go_respects_min_distance(self):
        # drive, stop for 30 near-identical frames, drive on
        times, pos = [], []
        t = 0.0
        x = 0.0
        for _ in range(10):  # approach
            times.append(t)
            pos.append((x, 0, 0))
            t += 1.0
            x += 2.0
        for _ in range(30):  # standstill, 1 cm jitter
            times.append(t)
            pos.append((x + 0.01 * np.sin(t), 0, 0))
            t += 1.0
        for _ in range(10):  # leave
            times.append(t)
            pos.append((x, 0, 0))
            t += 1.0
            x += 2.0
        gnss = traj(times, pos)
        d_min = 0.5
        seg = select_reference_frames(gnss, 25.0, d_min=d_min)
        pts = seg.reference_points
        for i in range(4):
            for j in range(i + 1, 4):
                assert np.linalg.norm(pts[i] - pts[j]) >= d_min

    def test_insufficient_support_near_ends(self):
        gnss = spaced_gnss(4)
        with pytest.raises(InsufficientSupportError):
            select_reference_frames(gnss, 0.0, d_min=0.5)

    def test_too_few_frames(self):
        gnss = spaced_gnss(3)
        with pytest.raises(InsufficientSupportError):
            select_reference_frames(gnss, 1.0, d_min=0.5)


class TestEvaluateSpline:
    def segment(self, rng):
        times = np.array([0.0, rng.uniform(0.2, 0.45), rng.uniform(0.55, 0.8), 1.0])
        points = rng.uniform(-100, 100, (4, 3))
        return SplineSegment(points, times)

    def test_passes_through_reference_points(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            seg = self.segment(rng)
            for u, p in zip(seg.reference_times, seg.reference_points):
                assert np.linalg.norm(evaluate_spline(seg, float(u)) - p) < 1e-9

    def test_collinear_uniform_midpoint(self):
        seg = SplineSegment(
            np.array([[0, 0, 0], [1, 1, 1], [2, 2, 2], [3, 3, 3]], float),
            np.array([0, 1 / 3, 2 / 3, 1.0]),
        )
        assert np.linalg.norm(evaluate_spline(seg, 0.5) - (1.5, 1.5, 1.5)) < 1e-9

    def test_reproduces_cubic_polynomial(self):
        rng = np.random.default_rng(1)
        coeffs = rng.uniform(-5, 5, (4, 3))

        def cubic(u):
            return coeffs[0] + coeffs[1] * u + coeffs[2] * u**2 + coeffs[3] * u**3

        times = np.array([0.0, 0.3, 0.65, 1.0])
        seg = SplineSegment(np.stack([cubic(u) for u in times]), times)
        for u in rng.uniform(0, 1, 100):
            assert np.linalg.norm(evaluate_spline(seg, float(u)) - cubic(u)) < 1e-7

    def test_matches_lagrange_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            seg = self.segment(rng)
            u = float(rng.uniform(0, 1))
            oracle = lagrange_oracle(seg.reference_points, seg.reference_times, u)
            assert np.linalg.norm(evaluate_spline(seg, u) - oracle) < 1e-7

    def test_u_outside_rejected(self):
        seg = self.segment(np.random.default_rng(3))
        with pytest.raises(OutOfRangeError):
            evaluate_spline(seg, 1.001)
        with pytest.raises(OutOfRangeError):
            evaluate_spline(seg, -0.001)

    def test_translation_equivariance(self):
        rng = np.random.default_rng(4)
        seg = self.segment(rng)
        shift = np.array([1234.5, -987.25, 55.0])
        shifted = SplineSegment(seg.reference_points + shift, seg.reference_times)
        for u in rng.uniform(0, 1, 20):
            a = evaluate_spline(seg, float(u)) + shift
            b = evaluate_spline(shifted, float(u))
            assert np.linalg.norm(a - b) < 1e-9

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(5)
        seg = self.segment(rng)
        theta = 0.7
        rot = np.array(
            [
                [np.cos(theta), -np.sin(theta), 0],
                [np.sin(theta), np.cos(theta), 0],
                [0, 0, 1],
            ]
        )
        rotated = SplineSegment(seg.reference_points @ rot.T, seg.reference_times)
        scale = np.abs(seg.reference_points).max()
        for u in rng.uniform(0, 1, 20):
            a = rot @ evaluate_spline(seg, float(u))
            b = evaluate_spline(rotated, float(u))
            assert np.linalg.norm(a - b) < 1e-12 * scale

    def test_continuity_on_u_grid(self):
        # reference frames sampled from a smooth drive, as the pipeline sees
        rng = np.random.default_rng(6)
        for _ in range(20):
            t0 = rng.uniform(0, 100)
            ts = t0 + np.array([0.0, 1.0, 2.0, 3.0]) + rng.uniform(-0.2, 0.2, 4)
            pts = np.stack(
                [10.0 * ts, 30.0 * np.sin(0.1 * ts), 2.0 * np.cos(0.13 * ts)], axis=1
            )
            seg = SplineSegment(pts, (ts - ts[0]) / (ts[-1] - ts[0]))
            grid = np.linspace(0, 1, 1001)
            samples = np.stack([evaluate_spline(seg, float(u)) for u in grid])
            steps = np.linalg.norm(np.diff(samples, axis=0), axis=1)
            assert steps.max() <= steps.sum() * 2e-3


class TestInterpolateTrajectory:
    def test_coincident_timestamps_reproduce_gnss(self):
        gnss = spaced_gnss(8)
        odometry = traj(gnss.timestamps[2:6], np.zeros((4, 3)))
        m = interpolate_trajectory(gnss, odometry, d_min=0.5)
        assert len(m.odometry) == 4
        for i, k in enumerate(range(2, 6)):
            assert np.linalg.norm(m.target.positions[i] - gnss.positions[k]) < 1e-9

    def test_keyframe_before_first_gnss_dropped(self):
        gnss = spaced_gnss(8)
        odometry = traj([-1.0, 3.0], np.zeros((2, 3)))
        m = interpolate_trajectory(gnss, odometry, d_min=0.5)
        assert m.dropped.tolist() == [0]
        assert m.matched_indices.tolist() == [1]

    def test_matched_and_dropped_partition(self):
        gnss = spaced_gnss(10)
        odometry = traj(np.linspace(-2.0, 11.0, 27), np.zeros((27, 3)))
        m = interpolate_trajectory(gnss, odometry, d_min=0.5)
        combined = sorted(m.matched_indices.tolist() + m.dropped.tolist())
        assert combined == list(range(27))
        assert np.array_equal(m.target.timestamps, m.odometry.timestamps)

    def test_analytic_curve_under_one_millimeter(self):
        def curve(t):
            return np.stack(
                [
                    100.0 * np.sin(0.2 * t),
                    80.0 * np.cos(0.17 * t),
                    5.0 * np.sin(0.11 * t),
                ],
                axis=-1,
            )

        t_gnss = np.arange(0.0, 60.0, 0.1)  # 10 Hz
        t_odo = np.arange(5.0, 55.0, 1.0 / 7.0)  # 7 Hz
        gnss = traj(t_gnss, curve(t_gnss))
        odometry = traj(t_odo, np.zeros((len(t_odo), 3)))
        m = interpolate_trajectory(gnss, odometry, d_min=0.5)
        assert len(m.dropped) == 0
        expected = curve(m.target.timestamps)
        err = np.linalg.norm(m.target.positions - expected, axis=1)
        assert err.max() < 1e-3

    def test_stddev_from_nearest_fix(self):
        n = 8
        t = np.arange(n, dtype=float)
        pos = np.stack([t * 10, np.zeros(n), np.zeros(n)], axis=1)
        sd = np.tile(np.arange(n, dtype=float)[:, None], (1, 3)) * 0.01
        gnss = traj(t, pos, sd)
        odometry = traj([2.2, 3.9], np.zeros((2, 3)))
        m = interpolate_trajectory(gnss, odometry, d_min=0.5)
        assert np.allclose(m.stddev[0], sd[2])
        assert np.allclose(m.stddev[1], sd[4])

    def test_zero_matches_fatal(self):
        gnss = spaced_gnss(8)
        odometry = traj([100.0, 101.0], np.zeros((2, 3)))
        with pytest.raises(InputError):
            interpolate_trajectory(gnss, odometry, d_min=0.5)
