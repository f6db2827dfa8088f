import numpy as np
import pytest

from conftest import pinhole
from pe3d.errors import BehindCamera, EmptySparseMap, Pe3dError
from pe3d.geometry.camera import project
from pe3d.geometry.grid import back_project_grid
from pe3d.simulation.primitives import Box, GroundPlane, Sphere
from pe3d.simulation.renderer import (
    SparseDepth,
    cast_pixels,
    complete_depth,
    project_sparse,
    render_depth,
    simulate_lidar,
)
from pe3d.simulation.scene import (
    FRONT_ROTATION,
    SimScene,
    camera_yaw,
    default_rig,
    place_object,
    random_scenes,
)


def _surface_distance(scene, points, index):
    return np.array([scene.primitives[i].distance(p[None])[0] for p, i in zip(points, index)])


class TestRig:
    def test_six_cameras_sixty_degrees_apart(self, rig):
        assert len(rig) == 6
        yaws = np.array([camera_yaw(cam) for cam in rig])
        steps = np.mod(np.diff(yaws), 2 * np.pi)
        np.testing.assert_allclose(steps, np.pi / 3, atol=1e-12)

    def test_origin_behind_every_camera(self, rig):
        for cam in rig:
            with pytest.raises(BehindCamera):
                project(np.zeros(3), cam)

    def test_zero_offsets_share_origin(self):
        for cam in default_rig(d_lc=0.0, delta=0.0):
            np.testing.assert_allclose(cam.center, 0.0, atol=1e-15)

    def test_negative_offset(self):
        with pytest.raises(Pe3dError):
            default_rig(d_lc=-1.0)


class TestRenderDepth:
    def test_ground_plane_below_horizon(self):
        cam = pinhole(
            K=[[50.0, 0.0, 32.0], [0.0, 50.0, 16.5], [0.0, 0.0, 1.0]],
            R=FRONT_ROTATION,
            width=64,
            height=33,
        )
        view = render_depth(SimScene(primitives=(GroundPlane(-2.0),)), cam, stride=1)
        assert view.shape == (33, 64)
        # 16 행의 중심이 주점 높이, 그 위로는 지면이 보이지 않는다
        assert not view.valid[:17].any()
        assert view.valid[17:].all()
        column = view.depth[17:, 32]
        np.testing.assert_allclose(column, 2.0 * 50.0 / (np.arange(17, 33) + 0.5 - 16.5), rtol=1e-12)
        assert np.all(np.diff(column) < 0)

    def test_sphere_dead_ahead(self):
        cam = default_rig(d_lc=0.75, delta=0.0)[0]
        scene = SimScene(primitives=(Sphere(center=(0.0, 10.0, 0.0), radius=1.0),))
        depth, index = cast_pixels(scene, cam, np.array([cam.intrinsics[0, 2]]), np.array([cam.intrinsics[1, 2]]))
        assert depth[0] == pytest.approx(10.0 - 1.0 - 0.75, abs=1e-9)
        assert index[0] == 0

    def test_valid_cells_lie_on_surfaces(self, rig):
        scene = random_scenes(1, seed=3, num_objects=3)[0]
        for cam in rig:
            view = render_depth(scene, cam, stride=16)
            depth = np.where(view.valid, view.depth, 1.0)
            points = np.moveaxis(back_project_grid(depth, cam, 16).points, 0, -1)[view.valid]
            assert np.max(_surface_distance(scene, points, view.primitive_map[view.valid]), initial=0.0) < 1e-6

    def test_box_cells_on_face_planes(self, rig, front_scene):
        cam = rig[0]
        view = render_depth(front_scene, cam, stride=4)
        box = front_scene.primitives[1]
        mask = view.object_mask(1)
        assert mask.any()
        points = np.moveaxis(back_project_grid(np.where(view.valid, view.depth, 1.0), cam, 4).points, 0, -1)[mask]
        front_face = np.abs(points[:, 1] - box.lo[1])
        top_face = np.abs(points[:, 2] - box.hi[2])
        assert np.all(np.minimum(front_face, top_face) < 1e-6)

    def test_classes(self, rig, front_scene):
        view = render_depth(front_scene, rig[0])
        assert set(np.unique(view.class_map)) <= {0, 1, 2}
        assert np.all(view.class_map[~view.valid] == 0)
        assert np.all(view.primitive_map[~view.valid] == -1)


class TestProjectSparse:
    def test_empty(self, cam):
        sparse = project_sparse(np.zeros((0, 3)), cam)
        assert sparse.fill_rate == 0.0

    def test_single_point(self, cam):
        sparse = project_sparse(np.array([[0.0, 0.0, 10.0]]), cam)
        assert np.count_nonzero(sparse.valid) == 1
        assert sparse.valid[10, 20]
        assert sparse.depth[10, 20] == pytest.approx(10.0)

    def test_nearest_point_wins(self, cam):
        sparse = project_sparse(np.array([[0.0, 0.0, 10.0], [0.0, 0.0, 5.0]]), cam)
        assert sparse.depth[10, 20] == pytest.approx(5.0)

    def test_behind_points_dropped(self, cam):
        assert project_sparse(np.array([[0.0, 0.0, -10.0]]), cam).fill_rate == 0.0

    def test_agrees_with_dense_render(self, rig, front_scene):
        cam = rig[0]
        view = render_depth(front_scene, cam, stride=16)
        depth = np.where(view.valid, view.depth, 1.0)
        points = np.moveaxis(back_project_grid(depth, cam, 16).points, 0, -1)[view.valid]
        sparse = project_sparse(points, cam, stride=16)
        np.testing.assert_array_equal(sparse.valid, view.valid)
        np.testing.assert_allclose(sparse.depth[view.valid], view.depth[view.valid], atol=1e-6)


class TestCompleteDepth:
    def test_dense_identity(self):
        depth = np.random.default_rng(0).uniform(1, 10, size=(4, 5))
        np.testing.assert_array_equal(complete_depth(SparseDepth(depth, np.ones((4, 5), dtype=bool))), depth)

    def test_single_cell(self):
        depth = np.zeros((4, 5))
        valid = np.zeros((4, 5), dtype=bool)
        depth[2, 3], valid[2, 3] = 7.5, True
        np.testing.assert_array_equal(complete_depth(SparseDepth(depth, valid)), np.full((4, 5), 7.5))

    def test_checkerboard(self):
        h, w = 6, 7
        rows, cols = np.indices((h, w))
        valid = (rows + cols) % 2 == 0
        depth = np.where(valid, np.random.default_rng(1).uniform(1, 10, size=(h, w)), 0.0)
        filled = complete_depth(SparseDepth(depth, valid))
        for r, c in zip(*np.nonzero(~valid)):
            neighbors = [
                depth[r + dr, c + dc]
                for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1))
                if 0 <= r + dr < h and 0 <= c + dc < w
            ]
            assert filled[r, c] in neighbors

    def test_empty(self):
        with pytest.raises(EmptySparseMap):
            complete_depth(SparseDepth(np.zeros((2, 2)), np.zeros((2, 2), dtype=bool)))


class TestScenes:
    def test_random_scenes_reproducible(self):
        a = random_scenes(3, seed=11)
        b = random_scenes(3, seed=11)
        for sa, sb in zip(a, b):
            np.testing.assert_array_equal(sa.centers(), sb.centers())

    def test_object_count(self):
        scene = random_scenes(1, seed=0, num_objects=4)[0]
        assert scene.centers().shape == (4, 3)
        assert [o.primitive_index for o in scene.objects] == [1, 2, 3, 4]

    def test_object_outside_region(self):
        with pytest.raises(Pe3dError):
            SimScene(primitives=(Sphere(center=(0.0, 100.0, 0.0), radius=1.0),))

    def test_bad_primitives(self):
        with pytest.raises(Pe3dError):
            Sphere(center=(0.0, 0.0, 0.0), radius=0.0)
        with pytest.raises(Pe3dError):
            Box(lo=(0.0, 0.0, 0.0), hi=(1.0, -1.0, 1.0))
        with pytest.raises(Pe3dError):
            place_object(0.0, 10.0, kind="cone")

    def test_lidar_points_on_surfaces(self, front_scene):
        cloud = simulate_lidar(front_scene, beams=8, azimuth_steps=90)
        assert cloud.shape[1] == 3 and cloud.shape[0] > 0
        distance = np.min(np.stack([p.distance(cloud) for p in front_scene.primitives]), axis=0)
        assert np.max(distance) < 1e-6
