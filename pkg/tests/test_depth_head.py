"""깊이 헤드: 기대 깊이, 융합, smooth-L1, 분포 초점 손실, 학습 테스트"""

import numpy as np
import pytest

from pe3d.depth.bins import make_bins
from pe3d.depth.head import (
    DepthDistribution,
    DepthLossWeights,
    FusionWeight,
    depth_loss,
    dfl_grad_logits,
    dfl_loss,
    expected_depth,
    fuse_depth,
    fuse_depth_backward,
    smooth_l1,
    smooth_l1_grad,
    softmax,
)
from pe3d.depth.metrics import depth_metrics
from pe3d.depth.network import DepthHead
from pe3d.errors import NoValidPixels, Pe3dError, ShapeMismatch


class TestExpectedDepth:
    def test_one_hot(self):
        bins = make_bins("ud", 1, 61, 4)
        probs = np.zeros((4, 1, 1))
        probs[2] = 1.0
        assert expected_depth(DepthDistribution(probs), bins)[0, 0] == pytest.approx(41.0)

    def test_uniform(self):
        bins = make_bins("ud", 1, 61, 4)
        assert expected_depth(np.full((4, 2, 2), 0.25), bins) == pytest.approx(np.full((2, 2), 31.0))

    def test_matches_loop(self):
        bins = make_bins("lid", 1, 61, 16)
        probs = softmax(np.random.default_rng(0).standard_normal((16, 3, 5)))
        fast = expected_depth(probs, bins)
        for r in range(3):
            for c in range(5):
                slow = sum(bins.centers[i] * probs[i, r, c] for i in range(16))
                assert fast[r, c] == pytest.approx(slow, abs=1e-12)

    def test_bin_count_mismatch(self):
        with pytest.raises(ShapeMismatch):
            expected_depth(np.full((3, 1, 1), 1 / 3), make_bins("ud", 1, 61, 4))

    def test_distribution_validation(self):
        with pytest.raises(Pe3dError):
            DepthDistribution(np.full((4, 1, 1), 0.3))
        with pytest.raises(Pe3dError):
            DepthDistribution(np.array([1.5, -0.5]).reshape(2, 1, 1))


class TestFuseDepth:
    def test_half(self):
        alpha = FusionWeight(0.0)
        assert fuse_depth(np.array([10.0]), np.array([20.0]), alpha)[0] == pytest.approx(15.0)

    def test_saturated(self):
        out = fuse_depth(np.array([10.0]), np.array([20.0]), FusionWeight(20.0))
        assert abs(out[0] - 10.0) < 1e-6

    def test_raw_alpha_gradient(self):
        d_reg, d_prob = np.array([3.0, 7.0]), np.array([5.0, 1.0])
        upstream = np.array([0.4, -1.3])
        raw, h = 0.3, 1e-6
        _, _, analytic = fuse_depth_backward(d_reg, d_prob, FusionWeight(raw), upstream)
        plus = upstream @ fuse_depth(d_reg, d_prob, FusionWeight(raw + h))
        minus = upstream @ fuse_depth(d_reg, d_prob, FusionWeight(raw - h))
        assert analytic == pytest.approx((plus - minus) / (2 * h), rel=1e-5)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            fuse_depth(np.ones(2), np.ones(3), FusionWeight())


class TestSmoothL1:
    def test_zero(self):
        gt = np.random.default_rng(0).uniform(1, 60, size=(4, 4))
        assert smooth_l1(gt, gt) == 0.0

    def test_at_beta(self):
        assert smooth_l1(np.full(5, 3.0), np.full(5, 1.0), beta=2.0) == pytest.approx(1.0)

    def test_matches_loop(self):
        rng = np.random.default_rng(1)
        pred, gt = rng.uniform(0, 10, size=50), rng.uniform(0, 10, size=50)
        expected = 0.0
        for p, g in zip(pred, gt):
            diff = abs(p - g)
            expected += 0.5 * diff ** 2 if diff < 1.0 else diff - 0.5
        assert smooth_l1(pred, gt, beta=1.0) == pytest.approx(expected / 50, abs=1e-12)

    def test_mask(self):
        pred, gt = np.array([1.0, 100.0]), np.array([1.5, 1.0])
        assert smooth_l1(pred, gt, mask=np.array([True, False])) == pytest.approx(0.125)
        with pytest.raises(NoValidPixels):
            smooth_l1(pred, gt, mask=np.array([False, False]))

    def test_gradient(self):
        rng = np.random.default_rng(2)
        pred, gt = rng.uniform(0, 5, size=10), rng.uniform(0, 5, size=10)
        grad = smooth_l1_grad(pred, gt)
        h = 1e-6
        for i in range(10):
            step = np.zeros(10)
            step[i] = h
            numeric = (smooth_l1(pred + step, gt) - smooth_l1(pred - step, gt)) / (2 * h)
            assert grad[i] == pytest.approx(numeric, abs=1e-7)


class TestDistributionFocalLoss:
    def test_hand_value(self):
        bins = make_bins("ud", 1, 2, 2)
        probs = np.full((2, 1), 0.5)
        assert dfl_loss(probs, np.array([1.25]), bins) == pytest.approx(np.log(2.0))

    def test_on_center_one_hot(self):
        bins = make_bins("ud", 1, 61, 4)
        probs = np.zeros((4, 1))
        probs[1] = 1.0
        assert dfl_loss(probs, np.array([21.0]), bins) == pytest.approx(0.0, abs=1e-12)

    def test_minimizer_by_descent(self):
        bins = make_bins("ud", 1, 61, 4)
        gt = np.array([26.0])
        logits = np.zeros((4, 1))
        for _ in range(3000):
            logits -= 2.0 * dfl_grad_logits(softmax(logits), gt, bins)
        probs = softmax(logits)[:, 0]
        # 26 은 21 과 41 사이, 하단 가중치 (41 - 26) / 20
        np.testing.assert_allclose(probs, [0.0, 0.75, 0.25, 0.0], atol=1e-2)

    def test_gradient(self):
        bins = make_bins("sid", 1, 61, 6)
        rng = np.random.default_rng(3)
        logits = rng.standard_normal((6, 7))
        gt = rng.uniform(1, 61, size=7)
        grad = dfl_grad_logits(softmax(logits), gt, bins)
        h = 1e-6
        for idx in [(0, 0), (2, 3), (5, 6)]:
            step = np.zeros_like(logits)
            step[idx] = h
            numeric = (dfl_loss(softmax(logits + step), gt, bins) - dfl_loss(softmax(logits - step), gt, bins)) / (2 * h)
            assert grad[idx] == pytest.approx(numeric, abs=1e-7)


class TestDepthLoss:
    def _instance(self):
        rng = np.random.default_rng(4)
        bins = make_bins("ud", 1, 61, 6)
        probs = softmax(rng.standard_normal((6, 3, 3)))
        pred = rng.uniform(1, 61, size=(3, 3))
        gt = rng.uniform(1, 61, size=(3, 3))
        return pred, probs, gt, bins

    def test_zero_weights(self):
        pred, probs, gt, bins = self._instance()
        assert depth_loss(pred, probs, gt, bins, DepthLossWeights(0.0, 0.0)) == 0.0

    def test_smooth_l1_only(self):
        pred, probs, gt, bins = self._instance()
        assert depth_loss(pred, probs, gt, bins, DepthLossWeights(1.0, 0.0)) == pytest.approx(smooth_l1(pred, gt))

    def test_combined(self):
        pred, probs, gt, bins = self._instance()
        expected = 0.25 * (smooth_l1(pred, gt) + dfl_loss(probs, gt, bins))
        assert depth_loss(pred, probs, gt, bins, DepthLossWeights(0.25, 0.25)) == pytest.approx(expected, abs=1e-12)

    def test_gt_clamped_to_bins(self):
        bins = make_bins("ud", 1, 61, 4)
        probs = np.full((4, 1), 0.25)
        # 범위 밖 정답도 오류 없이 d_max 로 잘린다
        value = depth_loss(np.array([61.0]), probs, np.array([80.0]), bins, DepthLossWeights(0.25, 0.25))
        assert np.isfinite(value)

    def test_negative_weight(self):
        with pytest.raises(Pe3dError):
            DepthLossWeights(-0.1, 0.25)


class TestDepthHead:
    def _data(self, n=200, dim=8, seed=0):
        rng = np.random.default_rng(seed)
        features = rng.standard_normal((n, dim))
        gt = np.clip(30.0 + 10.0 * features[:, 0], 1.0, 61.0)
        valid = rng.uniform(size=n) < 0.5
        valid[0] = True
        return features, gt, valid

    def test_fit_reduces_loss(self):
        features, gt, valid = self._data()
        head = DepthHead(8, make_bins("ud", 1, 61, 6), seed=0)
        history = head.fit(features, gt, valid, steps=100, lr=0.01)
        assert len(history) == 100
        assert history[-1] < history[0]

    def test_predict_map_shapes(self):
        head = DepthHead(8, make_bins("ud", 1, 61, 6), seed=0)
        depth, dist = head.predict_map(np.random.default_rng(0).standard_normal((8, 3, 5)))
        assert depth.shape == (3, 5)
        assert dist.probs.shape == (6, 3, 5)
        assert np.all((depth >= 1.0) & (depth <= 61.0))

    def test_gradients_match_finite_difference(self):
        features, gt, valid = self._data(n=12, dim=4, seed=1)
        head = DepthHead(4, make_bins("ud", 1, 61, 5), hidden_dim=6, seed=2)
        weights = DepthLossWeights(0.25, 0.25)
        _, grads = head.loss_and_grads(features, gt, valid, weights)
        h = 1e-6
        for name in ("W1", "Wp", "wr", "alpha"):
            param = head.params[name]
            idx = (0,) * param.ndim
            old = param[idx]
            param[idx] = old + h
            plus = head.loss(features, gt, valid, weights)
            param[idx] = old - h
            minus = head.loss(features, gt, valid, weights)
            param[idx] = old
            assert grads[name][idx] == pytest.approx((plus - minus) / (2 * h), rel=1e-4, abs=1e-8)

    def test_wrong_feature_width(self):
        head = DepthHead(4, make_bins("ud", 1, 61, 5), seed=0)
        with pytest.raises(ShapeMismatch):
            head.forward(np.zeros((3, 5)))


class TestDepthMetrics:
    def test_perfect(self):
        gt = np.array([1.0, 10.0, 40.0])
        metrics = depth_metrics(gt, gt)
        assert metrics["abs_rel"] == 0.0
        assert metrics["rmse"] == 0.0
        assert metrics["a1"] == 1.0

    def test_known_values(self):
        metrics = depth_metrics(np.array([2.0, 4.0]), np.array([1.0, 4.0]))
        assert metrics["abs_rel"] == pytest.approx(0.5)
        assert metrics["rmse"] == pytest.approx(np.sqrt(0.5))

    def test_no_valid(self):
        with pytest.raises(NoValidPixels):
            depth_metrics(np.ones(3), np.ones(3), mask=np.zeros(3, dtype=bool))
