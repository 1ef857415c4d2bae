import numpy as np
import pytest

from mapgeoref import InputError, RigidTransform, Trajectory, apply_rigid, deviation_report


def random_rotation(rng):
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


def test_identical_trajectories_zero():
    pts = np.random.default_rng(0).uniform(-5, 5, (20, 3))
    dev = deviation_report(pts, pts.copy())
    assert dev.mae == 0.0 and dev.stddev == 0.0 and dev.max == 0.0


def test_constant_three_four_offset():
    pts = np.random.default_rng(1).uniform(-5, 5, (10, 3))
    dev = deviation_report(pts, pts + np.array([3.0, 4.0, 0.0]))
    assert np.allclose(dev.per_point, 5.0)
    assert dev.mae == pytest.approx(5.0)
    assert dev.stddev == pytest.approx(0.0, abs=1e-12)
    assert dev.max == pytest.approx(5.0)


def test_matches_direct_recomputation():
    rng = np.random.default_rng(2)
    a = rng.uniform(-10, 10, (50, 3))
    b = rng.uniform(-10, 10, (50, 3))
    dev = deviation_report(a, b)
    d = np.sqrt(((a - b) ** 2).sum(axis=1))
    assert np.allclose(dev.per_point, d)
    assert dev.mae == pytest.approx(d.sum() / len(d))
    assert dev.stddev == pytest.approx(np.sqrt(((d - d.mean()) ** 2).mean()))
    assert dev.max == pytest.approx(d.max())


def test_rigid_invariance():
    rng = np.random.default_rng(3)
    a = Trajectory(np.arange(30.0), rng.uniform(-10, 10, (30, 3)))
    b = Trajectory(np.arange(30.0), rng.uniform(-10, 10, (30, 3)))
    base = deviation_report(a, b)
    tf = RigidTransform(random_rotation(rng), rng.uniform(-100, 100, 3))
    moved = deviation_report(apply_rigid(tf, a), apply_rigid(tf, b))
    assert np.allclose(moved.per_point, base.per_point, atol=1e-9)
    assert moved.mae == pytest.approx(base.mae, abs=1e-9)
    assert moved.stddev == pytest.approx(base.stddev, abs=1e-9)
    assert moved.max == pytest.approx(base.max, abs=1e-9)


def test_summary_relations():
    rng = np.random.default_rng(4)
    a = rng.uniform(-10, 10, (100, 3))
    b = a + rng.normal(0, 1, (100, 3))
    dev = deviation_report(a, b)
    assert dev.mae <= dev.max
    mean_sq = float((dev.per_point**2).mean())
    assert dev.stddev**2 == pytest.approx(mean_sq - dev.mae**2, rel=1e-12)


def test_length_mismatch():
    with pytest.raises(InputError):
        deviation_report(np.zeros((3, 3)), np.zeros((4, 3)))


def test_accepts_trajectories():
    t = Trajectory([0.0, 1.0], [[0, 0, 0], [1, 0, 0]])
    u = Trajectory([0.0, 1.0], [[0, 0, 1], [1, 0, 1]])
    dev = deviation_report(t, u)
    assert np.allclose(dev.per_point, 1.0)
