"""PE 유사도 맵과 객체 응집도 테스트"""

import numpy as np
import pytest

from app.services.experiment_service import ExperimentService
from pe3d.analysis.similarity import cohesion_metric, object_masks, object_reference, similarity_map
from pe3d.detector.variants import VariantSpec
from pe3d.encoding.anchors import EncoderBank
from pe3d.encoding.pe_grid import PEGrid, pe2d, pe_oracle_point
from pe3d.errors import EmptyRegion, Pe3dError, ZeroReferenceVector
from pe3d.simulation.primitives import GroundPlane
from pe3d.simulation.renderer import render_depth
from pe3d.simulation.scene import SimScene


def _grid(values, mask=None):
    mask = np.zeros(values.shape[1:], dtype=bool) if mask is None else mask
    return PEGrid(values=values, variant="oracle-point", mask=mask)


@pytest.fixture
def grids():
    rng = np.random.default_rng(0)
    return [_grid(rng.standard_normal((8, 4, 5))) for _ in range(3)]


class TestSimilarityMap:
    def test_reference_is_one(self, grids):
        sim = similarity_map(grids, (1, 2, 3))
        assert sim.num_views == 3
        assert sim.view(1)[3, 2] == 1.0
        assert np.all(np.abs(np.concatenate([v.ravel() for v in sim.values])) <= 1.0)

    def test_negated_view(self, grids):
        sim = similarity_map([grids[0], _grid(-grids[0].values)], (0, 1, 1))
        assert sim.view(1)[1, 1] == pytest.approx(-1.0, abs=1e-12)
        np.testing.assert_allclose(sim.view(1), -sim.view(0), atol=1e-12)

    def test_masked_cells_are_nan(self, grids):
        mask = np.zeros((4, 5), dtype=bool)
        mask[0, 4] = True
        sim = similarity_map([grids[0], _grid(grids[1].values, mask)], (0, 0, 0))
        assert np.isnan(sim.view(1)[0, 4])
        assert np.count_nonzero(np.isnan(sim.view(1))) == 1

    def test_image_pe_ignores_view(self):
        grid = pe2d(4, 6, 16)
        sim = similarity_map([grid, grid], (0, 3, 2))
        assert sim.view(1)[2, 3] == pytest.approx(1.0, abs=1e-12)

    def test_zero_reference(self):
        with pytest.raises(ZeroReferenceVector):
            similarity_map([_grid(np.zeros((4, 2, 2)))], (0, 0, 0))

    def test_bad_reference(self, grids):
        with pytest.raises(Pe3dError):
            similarity_map(grids, (3, 0, 0))
        with pytest.raises(Pe3dError):
            similarity_map(grids, (0, 5, 0))
        mask = np.zeros((4, 5), dtype=bool)
        mask[1, 1] = True
        with pytest.raises(Pe3dError):
            similarity_map([_grid(grids[0].values, mask)], (0, 1, 1))

    def test_centered_removes_common_offset(self, grids):
        offset = np.linspace(10.0, 20.0, 8)[:, None, None]
        shifted = [_grid(g.values + offset) for g in grids]
        raw = similarity_map(shifted, (0, 1, 2))
        centered = similarity_map(shifted, (0, 1, 2), center=True)
        # 공통 성분이 크면 원시 코사인은 어디서나 1 에 가깝다
        assert np.nanmin(np.concatenate([v.ravel() for v in raw.values])) > 0.9
        assert np.nanmin(np.concatenate([v.ravel() for v in centered.values])) < 0.0
        assert centered.view(0)[2, 1] == 1.0

    def test_centered_ignores_masked_cells(self, grids):
        mask = np.zeros((4, 5), dtype=bool)
        mask[0, 0] = True
        values = grids[1].values.copy()
        values[:, 0, 0] = 1e6
        sim = similarity_map([grids[0], _grid(values, mask)], (0, 0, 0), center=True)
        expected = similarity_map([grids[0], _grid(grids[1].values, mask)], (0, 0, 0), center=True)
        np.testing.assert_array_equal(np.isnan(sim.view(1)), np.isnan(expected.view(1)))
        np.testing.assert_allclose(sim.view(1)[~mask], expected.view(1)[~mask], atol=1e-12)


class TestCohesion:
    def test_constant_pe_has_no_margin(self):
        grid = _grid(np.tile(np.arange(1.0, 5.0)[:, None, None], (1, 3, 3)))
        mask = np.zeros((3, 3), dtype=bool)
        mask[:2, :2] = True
        inside, background, margin = cohesion_metric(similarity_map([grid], (0, 0, 0)), [mask])
        assert inside == pytest.approx(1.0)
        assert margin == pytest.approx(0.0, abs=1e-12)

    def test_reference_cell_excluded(self):
        values = np.ones((2, 1, 3))
        values[:, 0, 2] = [1.0, -1.0]
        grid = _grid(values)
        mask = np.array([[True, True, False]])
        inside, background, margin = cohesion_metric(similarity_map([grid], (0, 0, 0)), [mask])
        assert inside == pytest.approx(1.0)
        assert background == pytest.approx(0.0, abs=1e-12)
        assert margin == pytest.approx(1.0)

    def test_empty_region(self, grids):
        sim = similarity_map(grids, (0, 0, 0))
        with pytest.raises(EmptyRegion):
            cohesion_metric(sim, [None, None, None])

    def test_object_pe_is_cohesive(self, rig, front_scene):
        bank = EncoderBank.create(32, seed=0)
        views = [render_depth(front_scene, cam) for cam in rig]
        pe = [pe_oracle_point(v.depth, cam, front_scene.region, bank.point, 16, valid=v.valid) for v, cam in zip(views, rig)]
        ref, primitive = object_reference(views, pe)
        assert ref[0] == 0
        assert primitive == 1
        inside, background, margin = cohesion_metric(similarity_map(pe, ref, center=True), object_masks(views, primitive))
        assert inside > background
        assert margin > 0.0

    def test_point_pe_more_cohesive_than_ray_pe(self, rig, front_scene):
        service = ExperimentService(seed=0)
        margins = {}
        for text in ("oracle-point", "camera-ray"):
            grids, views = service.pe_grids(VariantSpec.parse(text), rig, front_scene.region, front_scene, 16)
            rendered = [view.rendered for view in views]
            ref, primitive = object_reference(rendered, grids)
            sim = similarity_map(grids, ref, center=True)
            margins[text] = cohesion_metric(sim, object_masks(rendered, primitive))[2]
        assert margins["oracle-point"] > 0.0
        assert margins["oracle-point"] > margins["camera-ray"]

    def test_no_visible_object(self, rig):
        views = [render_depth(SimScene(primitives=(GroundPlane(-2.0),)), cam) for cam in rig[:2]]
        with pytest.raises(EmptyRegion):
            object_reference(views)
