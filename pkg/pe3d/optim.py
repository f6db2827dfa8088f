"""파라미터 딕셔너리 {이름: ndarray} 를 제자리에서 갱신하는 옵티마이저"""

from typing import Dict
import logging

import numpy as np

from pe3d.errors import Pe3dError

logger = logging.getLogger(__name__)

Params = Dict[str, np.ndarray]


class SGDOptimizer:
    """전체 배치 경사 하강 (모멘텀 없음)"""

    def __init__(self, lr: float):
        if not lr > 0:
            raise Pe3dError(f"학습률은 0 보다 커야 합니다: {lr}")
        self.lr = lr

    def step(self, params: Params, grads: Params) -> None:
        for name in sorted(grads):
            params[name] -= self.lr * grads[name]


class AdamOptimizer:
    """Adam. 이름 정렬 순서로 갱신하므로 같은 입력에 대해 결과가 항상 같다."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if not lr > 0:
            raise Pe3dError(f"학습률은 0 보다 커야 합니다: {lr}")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: Params = {}
        self.v: Params = {}

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        for name in sorted(grads):
            g = grads[name]
            m = self.m.get(name, np.zeros_like(g))
            v = self.v.get(name, np.zeros_like(g))
            m = self.beta1 * m + (1 - self.beta1) * g
            v = self.beta2 * v + (1 - self.beta2) * (g ** 2)
            self.m[name], self.v[name] = m, v

            m_hat = m / (1 - self.beta1 ** self.t)
            v_hat = v / (1 - self.beta2 ** self.t)
            params[name] -= self.lr * (m_hat / (np.sqrt(v_hat) + self.eps))


def make_optimizer(name: str, lr: float):
    name = name.lower()
    optimizers = {"sgd": SGDOptimizer, "adam": AdamOptimizer}
    if name in optimizers:
        logger.debug(f"옵티마이저 {name}, 학습률 {lr}")
        return optimizers[name](lr)
    raise Pe3dError(f"지원하지 않는 옵티마이저: {name}")
