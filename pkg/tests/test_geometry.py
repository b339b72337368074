"""几何模块测试"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from geometry.camera import (
    CameraIntrinsics,
    Ray,
    angular_error,
    backproject,
    make_frustum,
    pixel_to_ray,
    project,
    project_points,
)
from geometry.transforms import (
    Pose,
    compose,
    invert,
    is_rotation,
    look_at,
    pose_from_vector,
    pose_to_vector,
    quaternion_to_rotation,
    random_pose,
    rotation_exp,
    rotation_log,
    rotation_to_quaternion,
)
from utils.exceptions import (
    BadRange,
    BehindCamera,
    GeometryError,
    InvalidRotation,
    NonPositiveDepth,
    OutOfImage,
    ZeroDirection,
)


class TestRotations:
    def test_exp_log_inverse(self, rng):
        for _ in range(200):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            w = axis * rng.uniform(0.0, math.pi - 1e-3)
            assert_allclose(rotation_log(rotation_exp(w)), w, atol=1e-9)

    def test_quarter_turn_about_z(self):
        r = rotation_exp([0.0, 0.0, math.pi / 2])
        assert_allclose(r @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], atol=1e-12)

    def test_tiny_angle_stays_orthonormal(self):
        assert is_rotation(rotation_exp([1e-10, 0.0, 0.0]))

    def test_log_near_pi(self):
        w = np.array([0.0, 0.0, math.pi - 1e-7])
        assert_allclose(np.linalg.norm(rotation_log(rotation_exp(w))), math.pi - 1e-7, atol=1e-6)

    def test_quaternion_round_trip(self, rng):
        for _ in range(50):
            r = random_pose(rng).rotation
            q = rotation_to_quaternion(r)
            assert q[0] >= 0
            assert_allclose(quaternion_to_rotation(q), r, atol=1e-12)

    def test_zero_quaternion_rejected(self):
        with pytest.raises(InvalidRotation):
            quaternion_to_rotation([0, 0, 0, 0])


class TestPose:
    def test_identity_maps_point_to_itself(self):
        assert_allclose(Pose.identity().transform([1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])

    def test_compose_with_inverse_is_identity(self, rng):
        for _ in range(20):
            p = random_pose(rng)
            q = compose(p, invert(p))
            assert_allclose(q.rotation, np.eye(3), atol=1e-9)
            assert_allclose(q.translation, np.zeros(3), atol=1e-9)

    def test_compose_is_associative(self, rng):
        a, b, c = (random_pose(rng) for _ in range(3))
        left = compose(compose(a, b), c)
        right = compose(a, compose(b, c))
        assert_allclose(left.rotation, right.rotation, atol=1e-12)
        assert_allclose(left.translation, right.translation, atol=1e-12)

    def test_non_orthonormal_rotation_rejected(self):
        with pytest.raises(InvalidRotation):
            Pose(np.diag([1.0, 1.0, -1.0]), np.zeros(3))

    def test_vector_round_trip(self, rng):
        p = random_pose(rng)
        q = pose_from_vector(pose_to_vector(p))
        assert_allclose(q.rotation, p.rotation, atol=1e-12)
        assert_allclose(q.translation, p.translation)

    def test_look_at_points_z_axis_at_target(self):
        pose = look_at([0.0, 0.0, 0.0], [0.0, 0.0, 2.0])
        assert_allclose(pose.rotation, np.eye(3), atol=1e-12)
        pose = look_at([1.0, 0.0, 0.0], [1.0, 0.0, 5.0])
        assert_allclose(pose.rotation[:, 2], [0.0, 0.0, 1.0], atol=1e-12)


class TestIntrinsics:
    def test_principal_point_must_be_inside(self):
        with pytest.raises(GeometryError):
            CameraIntrinsics(500.0, 500.0, 700.0, 240.0, 640, 480)

    def test_focal_length_must_be_positive(self):
        with pytest.raises(GeometryError):
            CameraIntrinsics(0.0, 500.0, 320.0, 240.0, 640, 480)

    def test_fov_of_centered_camera(self, intr):
        assert intr.horizontal_fov_deg() == pytest.approx(2 * math.degrees(math.atan(320.0 / 500.0)))

    def test_dict_round_trip(self, intr):
        assert CameraIntrinsics.from_dict(intr.to_dict()) == intr


class TestProjection:
    def test_point_on_axis_projects_to_principal_point(self, intr):
        u, v = project(intr, Pose.identity(), [0.0, 0.0, 2.0])
        assert (u, v) == pytest.approx((intr.cx, intr.cy))

    def test_known_projection(self, intr):
        u, v = project(intr, Pose.identity(), [0.5, -0.25, 2.0])
        assert u == pytest.approx(320.0 + 500.0 * 0.25)
        assert v == pytest.approx(240.0 - 500.0 * 0.125)

    def test_point_behind_camera(self, intr):
        with pytest.raises(BehindCamera):
            project(intr, Pose.identity(), [0.0, 0.0, -1.0])

    def test_backproject_then_project(self, intr, rng):
        pose = random_pose(rng)
        for _ in range(20):
            px = (rng.uniform(0, intr.width), rng.uniform(0, intr.height))
            depth = rng.uniform(0.3, 5.0)
            world = pose.transform(backproject(intr, px, depth))
            assert_allclose(project(intr, pose, world), px, atol=1e-9)

    def test_backproject_requires_positive_depth(self, intr):
        with pytest.raises(NonPositiveDepth):
            backproject(intr, (10.0, 10.0), 0.0)

    def test_project_points_marks_points_behind(self, intr):
        px, z = project_points(intr, Pose.identity(), [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
        assert np.all(np.isfinite(px[0]))
        assert np.all(np.isnan(px[1]))
        assert z[1] < 0


class TestRays:
    def test_pixel_ray_passes_through_projected_point(self, intr, front_pose):
        world = front_pose.transform([0.2, -0.1, 1.5])
        ray = pixel_to_ray(intr, front_pose, project(intr, front_pose, world))
        t = np.linalg.norm(world - ray.origin)
        assert_allclose(ray.at(t), world, atol=1e-9)

    def test_pixel_outside_image(self, intr):
        with pytest.raises(OutOfImage):
            pixel_to_ray(intr, Pose.identity(), (-1.0, 10.0))

    def test_image_border_is_inside(self, intr):
        pixel_to_ray(intr, Pose.identity(), (intr.width, intr.height))

    def test_zero_direction(self):
        with pytest.raises(ZeroDirection):
            Ray([0.0, 0.0, 0.0], [0.0, 0.0, 0.0])

    def test_angular_error(self):
        assert angular_error([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]) == pytest.approx(90.0)
        assert angular_error([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]) == pytest.approx(0.0, abs=1e-12)
        assert angular_error([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]) == pytest.approx(180.0)

    def test_angular_error_small_angle_accuracy(self):
        b = [math.cos(1e-8), math.sin(1e-8), 0.0]
        assert angular_error([1.0, 0.0, 0.0], b) == pytest.approx(math.degrees(1e-8), rel=1e-6)


class TestFrustum:
    def test_frustum_angles_match_fov(self, intr, front_pose):
        frustum = make_frustum(front_pose, intr, 0.1, 3.0)
        assert frustum.horizontal_angle_deg() == pytest.approx(intr.horizontal_fov_deg(), abs=1e-9)
        assert frustum.vertical_angle_deg() == pytest.approx(intr.vertical_fov_deg(), abs=1e-9)

    def test_corner_directions_are_unit(self, intr, front_pose):
        frustum = make_frustum(front_pose, intr, 0.1, 3.0)
        for d in frustum.corners:
            assert np.linalg.norm(d) == pytest.approx(1.0)
        assert_allclose(frustum.apex, front_pose.translation)

    def test_bad_range(self, intr):
        with pytest.raises(BadRange):
            make_frustum(Pose.identity(), intr, 2.0, 1.0)
