"""3D 점 인지 특징, 교차 어텐션 디코더, 장난감 검출기 학습 테스트"""

import numpy as np
import pytest

from pe3d.analysis.gradcheck import micro_detector
from pe3d.detector.decoder import DecoderState, decode_backward, decode_batch
from pe3d.detector.features import FeatureEmbedder, fuse_features
from pe3d.detector.trainer import TrainConfig, center_error_m, center_loss, greedy_assign, train_toy
from pe3d.detector.variants import VariantEncoders, VariantSpec, batch_pe
from pe3d.encoding.pe_grid import PEGrid
from pe3d.errors import AllTokensMasked, InvalidVariant, Pe3dError, ShapeMismatch
from pe3d.geometry.camera import PerceptionRegion
from pe3d.simulation.renderer import RenderedView
from pe3d.simulation.scene import random_scenes

C = 16


def _grid(values, mask=None):
    mask = np.zeros(values.shape[1:], dtype=bool) if mask is None else mask
    return PEGrid(values=values, variant="oracle-point", mask=mask)


class TestFuseFeatures:
    def test_zero_features_give_pe(self):
        rng = np.random.default_rng(0)
        pe = [rng.standard_normal((C, 2, 3)) for _ in range(2)]
        fused = fuse_features([np.zeros((C, 2, 3))] * 2, [_grid(p) for p in pe])
        np.testing.assert_array_equal(fused.values, np.concatenate([p.reshape(C, 6) for p in pe], axis=1))
        assert fused.count == 12
        assert fused.views == ((0, 2, 3), (6, 2, 3))

    def test_zero_pe_gives_features(self):
        feat = np.random.default_rng(1).standard_normal((C, 2, 3))
        fused = fuse_features([feat], [_grid(np.zeros((C, 2, 3)))])
        np.testing.assert_array_equal(fused.tokens, feat.reshape(C, 6).T)

    def test_masks_combined(self):
        pe_mask = np.zeros((2, 3), dtype=bool)
        pe_mask[0, 0] = True
        feature_mask = np.zeros((2, 3), dtype=bool)
        feature_mask[1, 2] = True
        fused = fuse_features([np.zeros((C, 2, 3))], [_grid(np.zeros((C, 2, 3)), pe_mask)], [feature_mask])
        np.testing.assert_array_equal(np.nonzero(fused.mask)[0], [0, 5])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            fuse_features([np.zeros((C, 2, 2))], [_grid(np.zeros((C, 2, 3)))])
        with pytest.raises(ShapeMismatch):
            fuse_features([np.zeros((C, 2, 3))], [])


class TestDecoder:
    def _decode(self, tokens, mask, K=3):
        state = DecoderState.init(K, C, seed=0)
        anchor_pe = np.random.default_rng(1).standard_normal((K, C))
        return decode_batch(state, anchor_pe, tokens, mask)

    def test_single_token_gets_full_weight(self):
        tokens = np.random.default_rng(0).standard_normal((1, 1, C))
        centers, cache = self._decode(tokens, np.zeros((1, 1), dtype=bool))
        np.testing.assert_array_equal(cache.attention, np.ones((1, 3, 1)))
        assert centers.shape == (1, 3, 3)
        assert np.all((centers > 0) & (centers < 1))

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(2)
        tokens = rng.standard_normal((2, 10, C))
        mask = np.zeros((2, 10), dtype=bool)
        mask[0, :4] = True
        _, cache = self._decode(tokens, mask)
        np.testing.assert_allclose(cache.attention.sum(axis=2), 1.0, atol=1e-12)
        assert np.all(cache.attention[0, :, :4] == 0.0)

    def test_identical_keys_uniform(self):
        token = np.random.default_rng(3).standard_normal(C)
        tokens = np.tile(token, (1, 5, 1))
        mask = np.array([[False, True, False, False, False]])
        _, cache = self._decode(tokens, mask)
        np.testing.assert_allclose(cache.attention[0, :, [0, 2, 3, 4]], 0.25, atol=1e-15)

    def test_all_masked(self):
        with pytest.raises(AllTokensMasked):
            self._decode(np.zeros((1, 4, C)), np.ones((1, 4), dtype=bool))

    def test_wrong_width(self):
        with pytest.raises(ShapeMismatch):
            self._decode(np.zeros((1, 4, C + 1)), np.zeros((1, 4), dtype=bool))

    def test_attention_matches_per_scene_softmax(self):
        rng = np.random.default_rng(5)
        tokens = rng.standard_normal((2, 7, C))
        _, cache = self._decode(tokens, np.zeros((2, 7), dtype=bool))
        for s in range(2):
            logits = cache.q_key @ tokens[s].T / np.sqrt(C)
            weights = np.exp(logits - logits.max(axis=1, keepdims=True))
            np.testing.assert_allclose(cache.attention[s], weights / weights.sum(axis=1, keepdims=True), atol=1e-12)

    def test_backward_can_skip_token_grads(self):
        rng = np.random.default_rng(4)
        tokens = rng.standard_normal((2, 6, C))
        mask = np.zeros((2, 6), dtype=bool)
        mask[1, 2] = True
        state = DecoderState.init(3, C, seed=0)
        _, cache = decode_batch(state, rng.standard_normal((3, C)), tokens, mask)
        upstream = rng.standard_normal((2, 3, 3))
        full, g_queries, g_tokens = decode_backward(state, cache, upstream)
        params, g_queries_only, skipped = decode_backward(state, cache, upstream, need_tokens=False)
        assert g_tokens.shape == tokens.shape
        assert skipped is None
        np.testing.assert_array_equal(g_queries_only, g_queries)
        for name, value in full.items():
            np.testing.assert_array_equal(params[name], value)

    def test_token_grads_match_finite_difference(self):
        rng = np.random.default_rng(6)
        tokens = rng.standard_normal((2, 5, C))
        mask = np.zeros((2, 5), dtype=bool)
        state = DecoderState.init(2, C, seed=1)
        anchor_pe = rng.standard_normal((2, C))
        upstream = rng.standard_normal((2, 2, 3))
        _, cache = decode_batch(state, anchor_pe, tokens, mask)
        _, _, g_tokens = decode_backward(state, cache, upstream)

        def f(x):
            return float(np.sum(upstream * decode_batch(state, anchor_pe, x, mask)[0]))

        h = 1e-6
        for idx in [(0, 0, 0), (1, 3, 5), (1, 4, C - 1)]:
            step = np.zeros_like(tokens)
            step[idx] = h
            numeric = (f(tokens + step) - f(tokens - step)) / (2 * h)
            assert g_tokens[idx] == pytest.approx(numeric, rel=1e-5, abs=1e-8)


class TestFeatureEmbedder:
    def _view(self, class_map):
        class_map = np.asarray(class_map)
        return RenderedView(
            depth=np.where(class_map > 0, 10.0, 0.0),
            valid=class_map > 0,
            class_map=class_map,
            primitive_map=np.where(class_map > 0, class_map - 1, -1),
        )

    def test_unknown_class_rejected(self):
        embedder = FeatureEmbedder(C, seed=0)
        assert embedder.num_classes == 4
        with pytest.raises(Pe3dError):
            embedder.embed(self._view([[1, 7]]), np.random.default_rng(0))

    def test_isotropic_noise(self):
        view = self._view([[0, 1, 2, 3]])
        clean = FeatureEmbedder(C, seed=0, noise=0.0, feature_noise=0.0)
        noisy = FeatureEmbedder(C, seed=0, noise=0.0, feature_noise=0.1)
        diff = noisy.embed(view, np.random.default_rng(0)) - clean.embed(view, np.random.default_rng(0))
        assert diff.shape == (C, 1, 4)
        along = np.tensordot(noisy.depth_axis, diff, axes=(0, 0))
        off_axis = diff - along[None] * noisy.depth_axis[:, None, None]
        # 하늘 셀을 포함한 모든 셀에 깊이 축 밖 잡음이 있다
        assert np.all(np.abs(off_axis).max(axis=0) > 0)
        assert 0.05 < diff.std() < 0.2


class TestAssignment:
    def test_greedy_pairs(self):
        pred = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [0.5, 0.5, 0.5]])
        gt = np.array([[0.9, 1.0, 1.0], [0.1, 0.0, 0.0]])
        assert greedy_assign(pred, gt) == [(1, 0), (0, 1)]

    def test_more_objects_than_queries(self):
        with pytest.raises(Pe3dError):
            greedy_assign(np.zeros((1, 3)), np.zeros((2, 3)))

    def test_center_loss_perfect(self):
        centers = np.random.default_rng(0).uniform(size=(2, 3, 3))
        targets = [centers[0, :2], centers[1, 2:]]
        loss, grad = center_loss(centers, targets)
        assert loss == 0.0
        np.testing.assert_array_equal(grad, 0.0)

    def test_center_loss_gradient(self):
        rng = np.random.default_rng(1)
        centers = rng.uniform(size=(2, 3, 3))
        targets = [rng.uniform(size=(2, 3)), rng.uniform(size=(1, 3))]
        _, grad = center_loss(centers, targets)
        h = 1e-6
        for idx in [(0, 0, 0), (0, 1, 2), (1, 2, 1)]:
            step = np.zeros_like(centers)
            step[idx] = h
            numeric = (center_loss(centers + step, targets)[0] - center_loss(centers - step, targets)[0]) / (2 * h)
            assert grad[idx] == pytest.approx(numeric, abs=1e-7)

    def test_error_in_meters(self):
        region = PerceptionRegion.default()
        gt = np.array([[0.5, 0.5, 0.5]])
        pred = np.array([[[0.5 + 1.0 / region.extent[0], 0.5, 0.5]]])
        assert center_error_m(pred, [gt], region) == pytest.approx(1.0)


class TestVariantSpec:
    def test_parse(self):
        spec = VariantSpec.parse("camera-ray:lid:1:61:64")
        assert spec.kind == "camera-ray" and spec.bins == "lid:1:61:64"
        assert VariantSpec.parse("lidar-ray:15").fixed_d == 15.0
        assert VariantSpec.parse("topk:3").k == 3
        assert VariantSpec.parse("topk").k == 5
        assert VariantSpec.parse("depth-point").needs_depth_head

    def test_params_label(self):
        assert VariantSpec.parse("lidar-ray:15").params == "d=15"
        assert VariantSpec.parse("topk:3", encoder_mode="separated").params == "k=3;encoder=separated"
        assert VariantSpec.parse("pe2d").params == ""

    @pytest.mark.parametrize("text", ["bev", "lidar-ray:0", "lidar-ray:", "pe2d:3", "topk:x", "camera-ray:lid:1"])
    def test_invalid(self, text):
        with pytest.raises(Pe3dError):
            VariantSpec.parse(text)

    def test_invalid_encoder_mode(self):
        with pytest.raises(InvalidVariant):
            VariantSpec.parse("pe2d", encoder_mode="tied")

    def test_encoder_groups(self):
        shared = VariantEncoders.create(VariantSpec.parse("oracle-point"), C, seed=0)
        separated = VariantEncoders.create(VariantSpec.parse("oracle-point", encoder_mode="separated"), C, seed=0)
        assert list(shared.trainable()) == ["feature"]
        assert list(separated.trainable()) == ["feature", "anchor"]
        ray = VariantEncoders.create(VariantSpec.parse("camera-ray:ud:1:61:4"), C, seed=0)
        assert ray.feature.in_dim == 3 * 4 * (C // 2)


def _small_config(**overrides):
    values = dict(steps=0, stride=64, embed_dim=C, num_queries=2, learning_rate=1e-3, optimizer="sgd", depth_head_steps=5)
    values.update(overrides)
    return TrainConfig(**values)


class TestTraining:
    def test_zero_steps_reproducible(self):
        scenes = random_scenes(2, seed=0)
        a = train_toy(scenes, "oracle-point", _small_config())
        b = train_toy(scenes, "oracle-point", _small_config())
        assert a.loss_history == []
        assert a.final_error_m == b.final_error_m
        for name, value in a.detector.params().items():
            np.testing.assert_array_equal(value, b.detector.params()[name])

    def test_loss_decreases(self):
        scenes = random_scenes(2, seed=1)
        result = train_toy(scenes, "oracle-point", _small_config(steps=30))
        assert len(result.loss_history) == 30
        assert result.loss_history[-1] < result.loss_history[0]

    def test_depth_guided_variant(self):
        scenes = random_scenes(1, seed=2)
        result = train_toy(scenes, "topk:2", _small_config(steps=2), eval_scenes=random_scenes(1, seed=3))
        assert result.depth_head is not None
        assert result.depth_views and result.depth_views[0][0].pred_depth is not None
        assert np.isfinite(result.final_error_m)

    def test_trainable_encoder(self):
        scenes = random_scenes(1, seed=4)
        result = train_toy(scenes, "lidar-ray:15", _small_config(steps=3, train_encoder=True))
        assert all(np.isfinite(result.loss_history))
        assert any(name.startswith("enc.") for name in result.detector.params(train_encoder=True))

    def test_invalid_config(self):
        with pytest.raises(Pe3dError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(Pe3dError):
            TrainConfig(embed_dim=18)
        with pytest.raises(Pe3dError):
            train_toy([], "pe2d", _small_config())

    def test_precomputed_tokens_match(self):
        detector, batch = micro_detector(np.random.default_rng(3))
        pe = batch_pe(batch, detector.encoders)
        loss, grads = detector.loss_and_grads(batch, pe)
        cached_loss, cached_grads = detector.loss_and_grads(batch, pe, tokens=batch.features + pe)
        assert cached_loss == loss
        for name, value in grads.items():
            np.testing.assert_array_equal(cached_grads[name], value)

    @pytest.mark.slow
    def test_depth_aware_pe_beats_image_pe(self):
        # 2D PE 는 여섯 뷰가 같은 값이라 방위를 구분하지 못한다
        scenes = random_scenes(8, seed=5)
        cfg = _small_config(steps=400, stride=32, embed_dim=32, num_queries=4, optimizer="adam", learning_rate=0.01)
        oracle = train_toy(scenes, "oracle-point", cfg)
        image = train_toy(scenes, "pe2d", cfg)
        assert oracle.train_error_m < image.train_error_m
