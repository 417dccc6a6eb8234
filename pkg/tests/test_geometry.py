import math

import numpy as np
import pytest

from popi.geometry import (
    Pose2,
    compose,
    inverse,
    pose_distance,
    transform_to_frame,
    wrap_angle,
)

# --- independent oracle: poses as 3x3 homogeneous matrices ---------------


def pose_to_matrix(p: Pose2) -> np.ndarray:
    c, s = math.cos(p.theta), math.sin(p.theta)
    return np.array([[c, -s, p.x], [s, c, p.y], [0.0, 0.0, 1.0]])


def matrix_to_pose(m: np.ndarray) -> Pose2:
    return Pose2(m[0, 2], m[1, 2], math.atan2(m[1, 0], m[0, 0]))


def random_pose(rng) -> Pose2:
    return Pose2(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-4 * math.pi, 4 * math.pi))


def test_compose_identity():
    p = Pose2(1.5, -2.0, 0.7)
    assert compose(Pose2.identity(), p).almost_equal(p)
    assert compose(p, Pose2.identity()).almost_equal(p)


def test_compose_quarter_turn():
    out = compose(Pose2(0, 0, math.pi / 2), Pose2(1, 0, 0))
    assert out.almost_equal(Pose2(0, 1, math.pi / 2))


def test_compose_matches_matrix_oracle():
    rng = np.random.default_rng(0)
    for _ in range(2000):
        a, b = random_pose(rng), random_pose(rng)
        expect = matrix_to_pose(pose_to_matrix(a) @ pose_to_matrix(b))
        assert compose(a, b).almost_equal(expect, tol=1e-9)


def test_inverse_trivial():
    assert inverse(Pose2.identity()).almost_equal(Pose2.identity())
    assert inverse(Pose2(1, 0, 0)).almost_equal(Pose2(-1, 0, 0))


def test_inverse_matches_matrix_oracle():
    rng = np.random.default_rng(1)
    for _ in range(2000):
        p = random_pose(rng)
        expect = matrix_to_pose(np.linalg.inv(pose_to_matrix(p)))
        assert inverse(p).almost_equal(expect, tol=1e-9)
        assert compose(p, inverse(p)).almost_equal(Pose2.identity(), tol=1e-9)


def test_transform_to_frame_trivial():
    g = Pose2(3.0, -1.0, 2.1)
    assert transform_to_frame([g], g)[0].almost_equal(Pose2.identity())
    assert transform_to_frame([], g) == []


def test_transform_round_trip():
    rng = np.random.default_rng(2)
    for _ in range(500):
        goal = random_pose(rng)
        poses = [random_pose(rng) for _ in range(4)]
        rel = transform_to_frame(poses, goal)
        assert len(rel) == len(poses)
        for p, r in zip(poses, rel):
            assert compose(goal, r).almost_equal(p, tol=1e-9)


def test_pose_distance_values():
    p = Pose2(0.3, 0.4, 1.0)
    assert pose_distance(p, p, 0.7) == 0.0
    assert pose_distance(Pose2(0, 0, 0), Pose2(3, 4, 0), 2.0) == pytest.approx(5.0)
    assert pose_distance(Pose2(0, 0, 0), Pose2(0, 0, math.pi), 0.5) == pytest.approx(0.5 * math.pi)


def test_pose_distance_rejects_negative_weight():
    with pytest.raises(ValueError):
        pose_distance(Pose2.identity(), Pose2.identity(), -0.1)


def test_pose_distance_symmetry_and_triangle():
    rng = np.random.default_rng(3)
    for _ in range(500):
        a, b, c = (random_pose(rng) for _ in range(3))
        w = rng.uniform(0, 2)
        assert pose_distance(a, b, w) == pytest.approx(pose_distance(b, a, w), abs=1e-12)
        assert pose_distance(a, c, w) <= pose_distance(a, b, w) + pose_distance(b, c, w) + 1e-9


def test_angles_always_normalized():
    rng = np.random.default_rng(4)
    for _ in range(500):
        a, b = random_pose(rng), random_pose(rng)
        for p in (compose(a, b), inverse(a), *transform_to_frame([a], b)):
            assert -math.pi < p.theta <= math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
