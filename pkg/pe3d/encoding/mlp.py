"""2층 MLP (Linear -> ReLU -> Linear) 와 단일 선형층, 해석적 역전파 포함

가중치 초기화: numpy PCG64 생성기에서 [-1/sqrt(fan_in), 1/sqrt(fan_in)] 균등분포.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from config.settings import settings
from pe3d.errors import Pe3dError, ShapeMismatch

ROW_BLOCK = 64


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def stable_matmul(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """행 단위로 결과가 고정되는 x @ w

    모든 행을 ROW_BLOCK 크기의 동일한 모양 블록으로 나눠 곱하므로
    같은 입력 행은 배치 크기나 위치와 무관하게 같은 비트 결과를 낸다.
    """
    n = x.shape[0]
    out = np.empty((n, w.shape[1]))
    block = np.zeros((ROW_BLOCK, x.shape[1]))
    for start in range(0, n, ROW_BLOCK):
        rows = min(ROW_BLOCK, n - start)
        block[:rows] = x[start:start + rows]
        block[rows:] = 0.0
        out[start:start + rows] = (block @ w)[:rows]
    return out


def _uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


@dataclass(eq=False)
class LinearParams:
    W: np.ndarray
    b: np.ndarray

    @classmethod
    def init(cls, in_dim: int, out_dim: int, seed: int = 0) -> "LinearParams":
        rng = make_rng(seed)
        return cls(W=_uniform(rng, in_dim, (in_dim, out_dim)), b=_uniform(rng, in_dim, (out_dim,)))

    def forward(self, x: np.ndarray) -> np.ndarray:
        return stable_matmul(x, self.W) + self.b

    def backward(self, x: np.ndarray, upstream: np.ndarray) -> Tuple[np.ndarray, "LinearParams"]:
        return upstream @ self.W.T, LinearParams(W=x.T @ upstream, b=upstream.sum(axis=0))

    def arrays(self, prefix: str = "") -> Dict[str, np.ndarray]:
        return {f"{prefix}W": self.W, f"{prefix}b": self.b}


@dataclass(eq=False)
class MLPParams:
    """in_dim -> hidden_dim (ReLU) -> out_dim"""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        if self.W1.shape[1] != self.b1.shape[0] or self.W2.shape[0] != self.W1.shape[1] or self.W2.shape[1] != self.b2.shape[0]:
            raise ShapeMismatch("MLP 파라미터 모양이 일관되지 않습니다")
        for name in ("W1", "b1", "W2", "b2"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise Pe3dError(f"MLP 파라미터 {name} 에 유한하지 않은 값이 있습니다")

    @classmethod
    def init(cls, in_dim: int, out_dim: int, hidden_dim: Optional[int] = None, seed: int = 0) -> "MLPParams":
        hidden_dim = hidden_dim or settings.hidden_multiplier * out_dim
        rng = make_rng(seed)
        return cls(
            W1=_uniform(rng, in_dim, (in_dim, hidden_dim)),
            b1=_uniform(rng, in_dim, (hidden_dim,)),
            W2=_uniform(rng, hidden_dim, (hidden_dim, out_dim)),
            b2=_uniform(rng, hidden_dim, (out_dim,)),
            seed=seed,
        )

    @property
    def in_dim(self) -> int:
        return int(self.W1.shape[0])

    @property
    def out_dim(self) -> int:
        return int(self.W2.shape[1])

    def copy(self) -> "MLPParams":
        return MLPParams(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy(), self.seed)

    def arrays(self, prefix: str = "") -> Dict[str, np.ndarray]:
        """옵티마이저용 이름 -> 배열 뷰 (제자리 갱신이 이 객체에 반영됨)"""
        return {f"{prefix}{name}": getattr(self, name) for name in ("W1", "b1", "W2", "b2")}


@dataclass
class MLPCache:
    x: np.ndarray
    pre: np.ndarray
    hidden: np.ndarray = field(repr=False)


def mlp_forward(x: np.ndarray, mlp: MLPParams) -> Tuple[np.ndarray, MLPCache]:
    if x.shape[-1] != mlp.in_dim:
        raise ShapeMismatch(f"MLP 입력 차원 {x.shape[-1]} 이 {mlp.in_dim} 과 다릅니다")
    pre = stable_matmul(x, mlp.W1) + mlp.b1
    hidden = np.maximum(pre, 0.0)
    out = stable_matmul(hidden, mlp.W2) + mlp.b2
    return out, MLPCache(x=x, pre=pre, hidden=hidden)


def mlp_backward(cache: MLPCache, mlp: MLPParams, upstream: np.ndarray) -> Tuple[np.ndarray, MLPParams]:
    """(입력 기울기, 파라미터 기울기)"""
    g_hidden = upstream @ mlp.W2.T
    g_pre = g_hidden * (cache.pre > 0)
    grads = MLPParams(
        W1=cache.x.T @ g_pre,
        b1=g_pre.sum(axis=0),
        W2=cache.hidden.T @ upstream,
        b2=upstream.sum(axis=0),
    )
    return g_pre @ mlp.W1.T, grads
