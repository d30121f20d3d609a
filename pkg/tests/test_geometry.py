"""Geometry checked against an independent homogeneous-matrix oracle (scipy)."""

import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from kitbench import geometry as geo


def oracle_matrix(pose: geo.Pose) -> np.ndarray:
    """4x4 homogeneous matrix built by scipy, independent of the package."""
    m = np.eye(4)
    m[:3, :3] = Rotation.from_quat(pose.orientation, scalar_first=True).as_matrix()
    m[:3, 3] = pose.position
    return m


def random_pose(rng) -> geo.Pose:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return geo.Pose(tuple(rng.uniform(-2, 2, 3)), tuple(q))


def assert_pose_close(p: geo.Pose, mat: np.ndarray, tol=1e-9):
    np.testing.assert_allclose(oracle_matrix(p), mat, atol=tol)


class TestCompose:
    def test_identity_neutral(self):
        rng = np.random.default_rng(0)
        p = random_pose(rng)
        for q in (geo.compose_poses(geo.Pose.identity(), p),
                  geo.compose_poses(p, geo.Pose.identity())):
            assert_pose_close(q, oracle_matrix(p))

    def test_inverse_yields_identity(self):
        rng = np.random.default_rng(1)
        p = random_pose(rng)
        ident = geo.compose_poses(p, geo.inverse_pose(p))
        assert np.allclose(ident.position, 0, atol=1e-12)
        assert geo.geodesic_angle(ident.orientation, geo.IDENTITY_QUAT) < 1e-9

    def test_translate_rotate_translate(self):
        # T(1,0,0) * Rz(90deg) * T(1,0,0) lands at (1,1,0)
        rz = geo.Pose(orientation=geo.rot_z(math.pi / 2))
        chain = geo.compose_poses(
            geo.compose_poses(geo.translate(1, 0, 0), rz), geo.translate(1, 0, 0)
        )
        np.testing.assert_allclose(chain.position, (1.0, 1.0, 0.0), atol=1e-12)

    def test_matches_matrix_product(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b = random_pose(rng), random_pose(rng)
            assert_pose_close(
                geo.compose_poses(a, b), oracle_matrix(a) @ oracle_matrix(b)
            )

    def test_associative(self):
        rng = np.random.default_rng(3)
        a, b, c = (random_pose(rng) for _ in range(3))
        left = geo.compose_poses(geo.compose_poses(a, b), c)
        right = geo.compose_poses(a, geo.compose_poses(b, c))
        np.testing.assert_allclose(left.position, right.position, atol=1e-9)
        assert geo.geodesic_angle(left.orientation, right.orientation) < 1e-9


class TestRelative:
    def test_self_relative_is_identity(self):
        rng = np.random.default_rng(4)
        p = random_pose(rng)
        rel = geo.relative_pose(p, p)
        assert np.allclose(rel.position, 0, atol=1e-9)
        assert geo.geodesic_angle(rel.orientation, geo.IDENTITY_QUAT) < 1e-9

    def test_world_frame(self):
        rng = np.random.default_rng(5)
        p = random_pose(rng)
        assert_pose_close(geo.relative_pose(geo.Pose.identity(), p), oracle_matrix(p))

    def test_translation_delta(self):
        rel = geo.relative_pose(geo.translate(1, 0, 0), geo.translate(1, 1, 0))
        np.testing.assert_allclose(rel.position, (0.0, 1.0, 0.0), atol=1e-12)

    def test_matches_matrix_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            a, b = random_pose(rng), random_pose(rng)
            expect = np.linalg.inv(oracle_matrix(a)) @ oracle_matrix(b)
            assert_pose_close(geo.relative_pose(a, b), expect, tol=1e-8)

    def test_roundtrip_with_compose(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a, d = random_pose(rng), random_pose(rng)
            back = geo.relative_pose(a, geo.compose_poses(a, d))
            assert np.allclose(back.position, d.position, atol=1e-9)
            assert geo.geodesic_angle(back.orientation, d.orientation) < 1e-9


class TestGeodesic:
    def test_zero_for_equal(self):
        rng = np.random.default_rng(8)
        q = random_pose(rng).orientation
        assert geo.geodesic_angle(q, q) < 1e-12

    def test_double_cover(self):
        rng = np.random.default_rng(9)
        q = random_pose(rng).orientation
        neg = tuple(-c for c in q)
        assert geo.geodesic_angle(q, neg) < 1e-9

    def test_quarter_turn(self):
        a = geo.geodesic_angle(geo.IDENTITY_QUAT, geo.rot_z(math.pi / 2))
        assert a == pytest.approx(math.pi / 2, abs=1e-12)

    def test_matches_axis_angle_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(200):
            q1 = random_pose(rng).orientation
            q2 = random_pose(rng).orientation
            r1 = Rotation.from_quat(q1, scalar_first=True)
            r2 = Rotation.from_quat(q2, scalar_first=True)
            expect = np.linalg.norm((r1.inv() * r2).as_rotvec())
            assert geo.geodesic_angle(q1, q2) == pytest.approx(expect, abs=1e-9)
            assert geo.geodesic_angle(q2, q1) == pytest.approx(expect, abs=1e-9)


class TestAverageQuaternions:
    def test_identical_inputs(self):
        rng = np.random.default_rng(11)
        q = random_pose(rng).orientation
        avg = geo.average_quaternions([q, q])
        assert geo.geodesic_angle(avg, q) < 1e-12

    def test_sign_alignment(self):
        rng = np.random.default_rng(12)
        q = random_pose(rng).orientation
        neg = tuple(-c for c in q)
        avg = geo.average_quaternions([q, neg])
        assert geo.geodesic_angle(avg, q) < 1e-9

    def test_small_angle_mean(self):
        # axis-angle oracle: mean of 10deg and 20deg about z is 15deg
        avg = geo.average_quaternions(
            [geo.rot_z(math.radians(10)), geo.rot_z(math.radians(20))]
        )
        assert geo.geodesic_angle(avg, geo.rot_z(math.radians(15))) < 1e-3

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="no estimates"):
            geo.average_quaternions([])

    def test_sign_flipped_permutation_same_rotation(self):
        rng = np.random.default_rng(13)
        base = random_pose(rng).orientation
        qs = []
        for _ in range(6):
            d = geo.quat_from_rotvec(rng.normal(scale=0.05, size=3))
            qs.append(geo.quat_multiply(base, d))
        flipped = [tuple(-c for c in q) if rng.random() < 0.5 else q for q in qs]
        rng.shuffle(flipped)
        a = geo.average_quaternions(qs)
        b = geo.average_quaternions(flipped)
        assert geo.geodesic_angle(a, b) < 1e-9


class TestMatrixConversions:
    def test_roundtrip_preserves_rotation(self):
        rng = np.random.default_rng(14)
        for _ in range(300):
            q = random_pose(rng).orientation
            back = geo.quat_from_matrix(geo.quat_to_matrix(q))
            assert geo.geodesic_angle(q, back) < 1e-9

    def test_matrix_matches_scipy(self):
        rng = np.random.default_rng(15)
        for _ in range(100):
            q = random_pose(rng).orientation
            expect = Rotation.from_quat(q, scalar_first=True).as_matrix()
            np.testing.assert_allclose(geo.quat_to_matrix(q), expect, atol=1e-12)

    def test_orthonormal_right_handed(self):
        rng = np.random.default_rng(16)
        m = np.array(geo.quat_to_matrix(random_pose(rng).orientation))
        np.testing.assert_allclose(m @ m.T, np.eye(3), atol=1e-9)
        assert np.linalg.det(m) == pytest.approx(1.0, abs=1e-9)


class TestRotvecAndTwist:
    def test_rotvec_roundtrip(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            v = rng.normal(scale=1.0, size=3)
            back = geo.quat_to_rotvec(geo.quat_from_rotvec(v))
            expect = Rotation.from_rotvec(v).as_rotvec()
            np.testing.assert_allclose(back, expect, atol=1e-9)

    def test_twist_about_z_matches_euler(self):
        rng = np.random.default_rng(18)
        for _ in range(100):
            yaw = rng.uniform(-math.pi + 1e-6, math.pi - 1e-6)
            q = geo.rot_z(yaw)
            assert geo.yaw_of(q) == pytest.approx(yaw, abs=1e-12)

    def test_twist_extracts_component(self):
        # swing-twist: Rz(0.7)*Rx(0.2) has twist exactly 0.7 about z
        q = geo.quat_multiply(
            geo.rot_z(0.7), geo.quat_from_axis_angle((1, 0, 0), 0.2)
        )
        assert geo.twist_angle(q, (0.0, 0.0, 1.0)) == pytest.approx(0.7, abs=1e-9)


class TestSlerp:
    def test_endpoints_exact(self):
        rng = np.random.default_rng(19)
        q0 = random_pose(rng).orientation
        q1 = random_pose(rng).orientation
        assert geo.geodesic_angle(geo.slerp(q0, q1, 0.0), q0) < 1e-9
        assert geo.geodesic_angle(geo.slerp(q0, q1, 1.0), q1) < 1e-9

    def test_constant_angular_rate(self):
        q0, q1 = geo.IDENTITY_QUAT, geo.rot_z(1.2)
        gaps = []
        prev = q0
        for i in range(1, 11):
            cur = geo.slerp(q0, q1, i / 10)
            gaps.append(geo.geodesic_angle(prev, cur))
            prev = cur
        assert max(gaps) - min(gaps) < 1e-9


class TestPoseSerialization:
    def test_list_roundtrip(self):
        rng = np.random.default_rng(20)
        p = random_pose(rng)
        assert geo.pose_from_list(geo.pose_to_list(p)) == p

    def test_validate_rejects_bad(self):
        with pytest.raises(ValueError):
            geo.Pose((0.0, 0.0, float("nan"))).validate()
        with pytest.raises(ValueError):
            geo.Pose((0, 0, 0), (1.0, 0.5, 0.0, 0.0)).validate()
