"""카메라 / LiDAR 광선 불일치와 광선 점 집합 테스트"""

import numpy as np
import pytest

from conftest import pinhole, random_rotation
from pe3d.depth.bins import make_bins
from pe3d.errors import InvalidRange
from pe3d.geometry.camera import back_project
from pe3d.ray_model import (
    RayGeometry,
    camera_ray_points,
    discrepancy,
    discrepancy_from_vectors,
    discrepancy_many,
    discrepancy_sweep,
    lidar_ray_point,
)
from pe3d.simulation.scene import FRONT_ROTATION


class TestDiscrepancy:
    def test_collinear_rays(self):
        for d in (0.5, 10.0, 1e6):
            assert discrepancy(RayGeometry(0.0, d, 1.0, 0.0)) == 0.0

    def test_far_limit(self):
        assert discrepancy(RayGeometry(np.pi / 4, 1e9, 1.0, 0.7)) < 1e-12

    def test_reference_value(self):
        g = RayGeometry(np.pi / 4, 10.0, 1.0, 0.7)
        value = discrepancy(g)
        assert 9.5e-5 < value < 9.6e-5
        assert value == pytest.approx(discrepancy_from_vectors(g), abs=1e-9)

    def test_matches_vector_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            g = RayGeometry(
                alpha_c=rng.uniform(-1.2, 1.2),
                d=rng.uniform(0.1, 100.0),
                d_lc=rng.uniform(0.0, 2.0),
                delta=rng.uniform(0.0, 1.0),
            )
            assert discrepancy(g) == pytest.approx(discrepancy_from_vectors(g), abs=1e-9)

    def test_many_matches_scalar(self):
        d = np.linspace(0.5, 60, 25)
        many = discrepancy_many(0.3, d, 0.75, 0.35)
        for di, value in zip(d, many):
            assert value == pytest.approx(discrepancy(RayGeometry(0.3, di, 0.75, 0.35)), abs=1e-15)

    def test_shrinks_with_depth(self):
        d, dis = discrepancy_sweep(np.pi / 4, 1.0, 0.7, 0.2, 60.0, 50)
        assert d.shape == dis.shape == (50,)
        assert dis[0] > dis[-1]

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(alpha_c=0.1, d=0.0, d_lc=1.0, delta=0.0),
            dict(alpha_c=0.1, d=1.0, d_lc=-1.0, delta=0.0),
            dict(alpha_c=np.pi / 2, d=1.0, d_lc=1.0, delta=0.0),
        ],
    )
    def test_invalid_geometry(self, kwargs):
        with pytest.raises(InvalidRange):
            RayGeometry(**kwargs)

    def test_invalid_sweep(self):
        with pytest.raises(InvalidRange):
            discrepancy_sweep(0.1, 1.0, 0.0, 5.0, 1.0, 10)


class TestRayPoints:
    def test_principal_ray(self, cam):
        points = camera_ray_points(320, 160, cam, make_bins("ud", 1, 61, 2))
        np.testing.assert_allclose(points, [[0, 0, 1], [0, 0, 61]], atol=1e-12)

    def test_collinear(self):
        rng = np.random.default_rng(2)
        bins = make_bins("lid", 1, 61, 64)
        for _ in range(20):
            cam = pinhole(R=random_rotation(rng), T=rng.uniform(-3, 3, size=3))
            points = camera_ray_points(rng.uniform(0, 640), rng.uniform(0, 320), cam, bins)
            s = np.linalg.svd(points - points.mean(axis=0), compute_uv=False)
            assert s[1] <= 1e-9 * s[0]

    def test_first_point_is_back_projection(self, cam):
        bins = make_bins("sid", 1, 61, 8)
        points = camera_ray_points(100.5, 40.5, cam, bins)
        np.testing.assert_array_equal(points[0], back_project(100.5, 40.5, bins.centers[0], cam))
        np.testing.assert_array_equal(points[-1], back_project(100.5, 40.5, 61.0, cam))

    def test_lidar_point(self):
        cam = pinhole(T=[0.0, 0.0, 1.0])
        np.testing.assert_allclose(lidar_ray_point(320, 160, cam, 15.0), [[0.0, 0.0, 16.0]], atol=1e-12)

    def test_distinguishes_cameras(self, cam):
        other = pinhole(T=[0.5, 0.0, 0.0])
        assert not np.allclose(lidar_ray_point(200, 100, cam, 15.0), lidar_ray_point(200, 100, other, 15.0))

    def test_direction_change_matches_discrepancy(self):
        # 전방 카메라: 시선 방향 d_lc, 오른쪽 delta 오프셋
        d_lc, delta, alpha = 1.0, 0.7, np.pi / 6
        cam = pinhole(R=FRONT_ROTATION, T=[delta, d_lc, 0.0])
        u, v = 320 + 500 * np.tan(alpha), 160.0
        ray_dir = cam.rotation @ cam.k_inv @ np.array([u, v, 1.0])
        ray_dir /= np.linalg.norm(ray_dir)

        angles = []
        for fixed_d in (0.2, 60.0):
            point = lidar_ray_point(u, v, cam, fixed_d)[0]
            lidar_dir = point / np.linalg.norm(point)
            measured = 1.0 - float(ray_dir @ lidar_dir)
            expected = discrepancy(RayGeometry(alpha, fixed_d, d_lc, delta))
            assert measured == pytest.approx(expected, abs=1e-6)
            angles.append(lidar_dir)
        assert not np.allclose(angles[0], angles[1])
