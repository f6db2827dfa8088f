from dataclasses import dataclass

import numpy as np

from config.settings import settings
from pe3d.errors import Pe3dError

SCALE = 2.0 * np.pi


@dataclass(frozen=True)
class SineSpec:
    """좌표 하나를 half_dim 차원 sin/cos 벡터로 바꾸는 설정"""

    half_dim: int
    temperature: float = settings.sine_temperature

    def __post_init__(self):
        if self.half_dim <= 0 or self.half_dim % 2:
            raise Pe3dError(f"half_dim 은 양의 짝수여야 합니다: {self.half_dim}")
        if not self.temperature > 1:
            raise Pe3dError(f"temperature 는 1 보다 커야 합니다: {self.temperature}")

    @classmethod
    def for_embed_dim(cls, embed_dim: int) -> "SineSpec":
        return cls(half_dim=embed_dim // 2)

    @property
    def frequencies(self) -> np.ndarray:
        """인덱스 j 의 분모 temperature^(2 floor(j/2) / half_dim), 짝/홀 쌍이 같은 주파수를 공유"""
        j = np.arange(self.half_dim, dtype=np.float64)
        return self.temperature ** (2.0 * (j // 2) / self.half_dim)


def sine_encode(x, spec: SineSpec) -> np.ndarray:
    """(...) -> (..., half_dim). 짝수 항목은 sin, 홀수 항목은 같은 주파수의 cos."""
    phase = np.asarray(x, dtype=np.float64)[..., None] * SCALE / spec.frequencies
    out = np.empty_like(phase)
    out[..., 0::2] = np.sin(phase[..., 0::2])
    out[..., 1::2] = np.cos(phase[..., 1::2])
    return out


def sine_encode_grad(x, spec: SineSpec) -> np.ndarray:
    """sine_encode 의 x 에 대한 항목별 도함수 (..., half_dim)"""
    rate = SCALE / spec.frequencies
    phase = np.asarray(x, dtype=np.float64)[..., None] * rate
    out = np.empty_like(phase)
    out[..., 0::2] = np.cos(phase[..., 0::2]) * rate[0::2]
    out[..., 1::2] = -np.sin(phase[..., 1::2]) * rate[1::2]
    return out
