"""깊이 헤드 수식: 확률 깊이 기댓값, 회귀/확률 깊이 융합, smooth-L1 / DFL 손실

확률 텐서 P 는 (N_D, ...) 모양이고 나머지 축은 깊이 맵과 같다.
모든 손실은 유효 셀 평균이며 각 함수에 대응하는 해석적 기울기 함수가 있다.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config.settings import settings
from pe3d.depth.bins import DepthBins, bracket_many
from pe3d.errors import NoValidPixels, Pe3dError, ShapeMismatch

SUM_TOL = 1e-9


def softmax(logits: np.ndarray, axis: int = 0) -> np.ndarray:
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def softmax_backward(probs: np.ndarray, grad_probs: np.ndarray, axis: int = 0) -> np.ndarray:
    return probs * (grad_probs - np.sum(probs * grad_probs, axis=axis, keepdims=True))


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


@dataclass(frozen=True, eq=False)
class DepthDistribution:
    """셀별 깊이 빈 확률 (N_D, H_F, W_F)"""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise Pe3dError("확률은 0 이상의 유한한 값이어야 합니다")
        if np.max(np.abs(probs.sum(axis=0) - 1.0), initial=0.0) > SUM_TOL:
            raise Pe3dError("셀별 확률의 합은 1 이어야 합니다")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_logits(cls, logits: np.ndarray) -> "DepthDistribution":
        return cls(softmax(np.asarray(logits, dtype=np.float64), axis=0))

    @property
    def count(self) -> int:
        return int(self.probs.shape[0])


@dataclass
class FusionWeight:
    """학습 가능한 융합 가중치. raw 는 제약 없는 값이고 value = sigmoid(raw)."""

    raw: float = 0.0

    @property
    def value(self) -> float:
        return float(sigmoid(self.raw))


@dataclass(frozen=True)
class DepthLossWeights:
    lambda_sm: float = settings.lambda_sm
    lambda_dfl: float = settings.lambda_dfl

    def __post_init__(self):
        if self.lambda_sm < 0 or self.lambda_dfl < 0:
            raise Pe3dError("손실 가중치는 음수일 수 없습니다")


def _probs(P) -> np.ndarray:
    return P.probs if isinstance(P, DepthDistribution) else np.asarray(P, dtype=np.float64)


def _valid_mask(shape, mask: Optional[np.ndarray]) -> np.ndarray:
    if mask is None:
        mask = np.ones(shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != tuple(shape):
        raise ShapeMismatch(f"마스크 모양 {mask.shape} 이 맵 모양 {tuple(shape)} 과 다릅니다")
    if not mask.any():
        raise NoValidPixels("유효한 셀이 없습니다")
    return mask


def expected_depth(P, bins: DepthBins) -> np.ndarray:
    probs = _probs(P)
    if probs.shape[0] != bins.count:
        raise ShapeMismatch(f"확률 빈 수({probs.shape[0]})와 깊이 빈 수({bins.count})가 다릅니다")
    return np.tensordot(bins.centers, probs, axes=(0, 0))


def expected_depth_backward(grad: np.ndarray, bins: DepthBins) -> np.ndarray:
    grad = np.asarray(grad, dtype=np.float64)
    return bins.centers.reshape((-1,) + (1,) * grad.ndim) * grad


def fuse_depth(d_reg: np.ndarray, d_prob: np.ndarray, alpha: FusionWeight) -> np.ndarray:
    """D^pred = a D^R + (1 - a) D^P"""
    d_reg = np.asarray(d_reg, dtype=np.float64)
    d_prob = np.asarray(d_prob, dtype=np.float64)
    if d_reg.shape != d_prob.shape:
        raise ShapeMismatch(f"D^R {d_reg.shape} 와 D^P {d_prob.shape} 모양이 다릅니다")
    a = alpha.value
    return a * d_reg + (1.0 - a) * d_prob


def fuse_depth_backward(
    d_reg: np.ndarray, d_prob: np.ndarray, alpha: FusionWeight, grad: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, float]:
    """(dL/dD^R, dL/dD^P, dL/d raw alpha)"""
    a = alpha.value
    grad = np.asarray(grad, dtype=np.float64)
    g_raw = float(np.sum(grad * (np.asarray(d_reg) - np.asarray(d_prob)))) * a * (1.0 - a)
    return a * grad, (1.0 - a) * grad, g_raw


def smooth_l1(pred, gt, beta: float = settings.smooth_l1_beta, mask=None) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"예측 {pred.shape} 과 정답 {gt.shape} 모양이 다릅니다")
    if not beta > 0:
        raise Pe3dError(f"beta 는 0 보다 커야 합니다: {beta}")
    mask = _valid_mask(pred.shape, mask)

    diff = np.abs(pred[mask] - gt[mask])
    per_cell = np.where(diff < beta, 0.5 * diff * diff / beta, diff - 0.5 * beta)
    return float(np.mean(per_cell))


def smooth_l1_grad(pred, gt, beta: float = settings.smooth_l1_beta, mask=None) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    mask = _valid_mask(pred.shape, mask)

    diff = pred - gt
    grad = np.where(np.abs(diff) < beta, diff / beta, np.sign(diff))
    return np.where(mask, grad, 0.0) / np.count_nonzero(mask)


def _dfl_targets(gt: np.ndarray, bins: DepthBins, mask: np.ndarray) -> np.ndarray:
    """셀별 두 인접 빈에 (w, 1-w) 를 둔 목표 분포 (N_D, ...)"""
    targets = np.zeros((bins.count,) + gt.shape)
    lower, weight = bracket_many(gt[mask], bins)
    cells = np.nonzero(mask)
    targets[(lower,) + cells] += weight
    targets[(lower + 1,) + cells] += 1.0 - weight
    return targets


def dfl_loss(P, gt, bins: DepthBins, mask=None, floor: float = settings.prob_floor) -> float:
    """분포 초점 손실. gt 는 호출 전에 [d_min, d_max] 로 잘라야 한다."""
    probs = _probs(P)
    gt = np.asarray(gt, dtype=np.float64)
    if probs.shape[1:] != gt.shape or probs.shape[0] != bins.count:
        raise ShapeMismatch(f"확률 {probs.shape} 과 정답 {gt.shape} / 빈 {bins.count} 이 맞지 않습니다")
    mask = _valid_mask(gt.shape, mask)

    targets = _dfl_targets(gt, bins, mask)
    per_cell = -np.sum(targets * np.log(np.maximum(probs, floor)), axis=0)
    return float(np.mean(per_cell[mask]))


def dfl_grad_probs(P, gt, bins: DepthBins, mask=None, floor: float = settings.prob_floor) -> np.ndarray:
    probs = _probs(P)
    gt = np.asarray(gt, dtype=np.float64)
    mask = _valid_mask(gt.shape, mask)

    targets = _dfl_targets(gt, bins, mask)
    active = (targets > 0) & (probs > floor)
    grad = np.zeros_like(probs)
    grad[active] = -targets[active] / probs[active]
    return grad / np.count_nonzero(mask)


def dfl_grad_logits(P, gt, bins: DepthBins, mask=None, floor: float = settings.prob_floor) -> np.ndarray:
    probs = _probs(P)
    return softmax_backward(probs, dfl_grad_probs(probs, gt, bins, mask, floor), axis=0)


def clamp_to_bins(gt, bins: DepthBins) -> np.ndarray:
    return np.clip(np.asarray(gt, dtype=np.float64), bins.d_min, bins.d_max)


def depth_loss(
    d_pred,
    P,
    gt,
    bins: DepthBins,
    weights: DepthLossWeights = DepthLossWeights(),
    mask=None,
    beta: float = settings.smooth_l1_beta,
) -> float:
    """L_depth = lambda_sm * smooth-L1(D^pred, gt) + lambda_dfl * DFL(P, gt)"""
    gt = clamp_to_bins(gt, bins)
    total = 0.0
    if weights.lambda_sm > 0:
        total += weights.lambda_sm * smooth_l1(d_pred, gt, beta, mask)
    if weights.lambda_dfl > 0:
        total += weights.lambda_dfl * dfl_loss(P, gt, bins, mask)
    return total


def depth_loss_grads(
    d_pred,
    P,
    gt,
    bins: DepthBins,
    weights: DepthLossWeights = DepthLossWeights(),
    mask=None,
    beta: float = settings.smooth_l1_beta,
) -> Tuple[np.ndarray, np.ndarray]:
    """(dL/dD^pred, dL/dP)"""
    gt = clamp_to_bins(gt, bins)
    probs = _probs(P)
    g_pred = np.zeros_like(np.asarray(d_pred, dtype=np.float64))
    g_probs = np.zeros_like(probs)
    if weights.lambda_sm > 0:
        g_pred = weights.lambda_sm * smooth_l1_grad(d_pred, gt, beta, mask)
    if weights.lambda_dfl > 0:
        g_probs = weights.lambda_dfl * dfl_grad_probs(probs, gt, bins, mask)
    return g_pred, g_probs
