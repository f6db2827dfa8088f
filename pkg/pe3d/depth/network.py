"""셀 단위 깊이 헤드 네트워크

특징 벡터 하나를 입력으로 받는 2층 퍼셉트론이며 은닉층 뒤에서 두 갈래로 나뉜다.
회귀 갈래는 D^R, 확률 갈래는 깊이 빈 로짓 -> softmax -> P -> D^P 를 낸다.
두 출력은 학습 가능한 alpha 로 융합된다. 역전파는 모두 해석적으로 계산한다.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple
import logging

import numpy as np

from config.settings import settings
from pe3d.depth.bins import DepthBins
from pe3d.depth.head import (
    DepthDistribution,
    DepthLossWeights,
    FusionWeight,
    clamp_to_bins,
    depth_loss,
    depth_loss_grads,
    softmax,
    softmax_backward,
)
from pe3d.errors import ShapeMismatch
from pe3d.optim import make_optimizer

logger = logging.getLogger(__name__)


@dataclass
class DepthHeadOutput:
    features: np.ndarray
    hidden_pre: np.ndarray
    hidden: np.ndarray
    probs: np.ndarray  # (N_D, n)
    d_reg: np.ndarray
    d_prob: np.ndarray
    d_pred: np.ndarray


class DepthHead:
    """특징 (n, C_in) -> 셀별 깊이 예측"""

    def __init__(self, in_dim: int, bins: DepthBins, hidden_dim: Optional[int] = None, seed: int = 0):
        self.bins = bins
        self.in_dim = in_dim
        self.hidden_dim = hidden_dim or settings.hidden_multiplier * in_dim
        rng = np.random.default_rng(seed)

        def uniform(fan_in, shape):
            bound = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, size=shape)

        self.params: Dict[str, np.ndarray] = {
            "W1": uniform(in_dim, (in_dim, self.hidden_dim)),
            "b1": uniform(in_dim, (self.hidden_dim,)),
            "Wp": uniform(self.hidden_dim, (self.hidden_dim, bins.count)),
            "bp": uniform(self.hidden_dim, (bins.count,)),
            "wr": uniform(self.hidden_dim, (self.hidden_dim,)),
            # 회귀 출력은 빈 범위 중앙에서 시작
            "br": np.array([0.5 * (bins.d_min + bins.d_max)]),
            "alpha": np.zeros(1),
        }

    @property
    def alpha(self) -> FusionWeight:
        return FusionWeight(float(self.params["alpha"][0]))

    def forward(self, features: np.ndarray) -> DepthHeadOutput:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.in_dim:
            raise ShapeMismatch(f"특징은 (n, {self.in_dim}) 모양이어야 합니다: {features.shape}")
        p = self.params
        hidden_pre = features @ p["W1"] + p["b1"]
        hidden = np.maximum(hidden_pre, 0.0)
        probs = softmax(hidden @ p["Wp"] + p["bp"], axis=1).T
        d_reg = hidden @ p["wr"] + p["br"][0]
        d_prob = self.bins.centers @ probs
        a = self.alpha.value
        return DepthHeadOutput(
            features=features,
            hidden_pre=hidden_pre,
            hidden=hidden,
            probs=probs,
            d_reg=d_reg,
            d_prob=d_prob,
            d_pred=a * d_reg + (1.0 - a) * d_prob,
        )

    def backward(self, out: DepthHeadOutput, grad_pred: np.ndarray, grad_probs: np.ndarray) -> Dict[str, np.ndarray]:
        p = self.params
        a = self.alpha.value
        g_reg = a * grad_pred
        g_dp = (1.0 - a) * grad_pred
        g_alpha = np.sum(grad_pred * (out.d_reg - out.d_prob)) * a * (1.0 - a)

        g_probs = grad_probs + self.bins.centers[:, None] * g_dp[None, :]
        g_logits = softmax_backward(out.probs, g_probs, axis=0).T

        g_hidden = g_logits @ p["Wp"].T + np.outer(g_reg, p["wr"])
        g_pre = g_hidden * (out.hidden_pre > 0)
        return {
            "W1": out.features.T @ g_pre,
            "b1": g_pre.sum(axis=0),
            "Wp": out.hidden.T @ g_logits,
            "bp": g_logits.sum(axis=0),
            "wr": out.hidden.T @ g_reg,
            "br": np.array([g_reg.sum()]),
            "alpha": np.array([g_alpha]),
        }

    def loss(self, features, gt, valid, weights: DepthLossWeights) -> float:
        out = self.forward(features)
        return depth_loss(out.d_pred, out.probs, gt, self.bins, weights, valid)

    def loss_and_grads(self, features, gt, valid, weights: DepthLossWeights) -> Tuple[float, Dict[str, np.ndarray]]:
        out = self.forward(features)
        value = depth_loss(out.d_pred, out.probs, gt, self.bins, weights, valid)
        g_pred, g_probs = depth_loss_grads(out.d_pred, out.probs, gt, self.bins, weights, valid)
        return value, self.backward(out, g_pred, g_probs)

    def fit(
        self,
        features: np.ndarray,
        gt: np.ndarray,
        valid: np.ndarray,
        weights: DepthLossWeights = DepthLossWeights(),
        steps: int = settings.depth_head_steps,
        lr: float = settings.depth_head_lr,
        optimizer: str = "adam",
    ) -> List[float]:
        """희소 정답 깊이로 학습하고 손실 기록을 반환"""
        opt = make_optimizer(optimizer, lr)
        history = []
        for step in range(steps):
            value, grads = self.loss_and_grads(features, gt, valid, weights)
            history.append(value)
            opt.step(self.params, grads)
        if history:
            logger.info(f"깊이 헤드 학습 완료: {steps} 스텝, 손실 {history[0]:.4f} -> {history[-1]:.4f}")
        return history

    def predict(self, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(빈 범위로 자른 D^pred (n,), P (N_D, n))"""
        out = self.forward(features)
        return clamp_to_bins(out.d_pred, self.bins), out.probs

    def predict_map(self, feature_grid: np.ndarray) -> Tuple[np.ndarray, DepthDistribution]:
        """특징 격자 (C, H, W) -> 깊이 맵 (H, W) 와 분포 (N_D, H, W)"""
        c, h, w = feature_grid.shape
        depth, probs = self.predict(feature_grid.reshape(c, h * w).T)
        return depth.reshape(h, w), DepthDistribution(probs.reshape(-1, h, w))
