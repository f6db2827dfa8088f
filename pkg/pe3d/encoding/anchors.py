from dataclasses import dataclass
from typing import Literal
import logging

import numpy as np

from pe3d.encoding.mlp import MLPParams, make_rng
from pe3d.encoding.point_encoder import encode_points
from pe3d.encoding.sine import SineSpec
from pe3d.errors import Pe3dError, ShapeMismatch

logger = logging.getLogger(__name__)

EncoderMode = Literal["shared", "separated"]


@dataclass(eq=False)
class AnchorPoints:
    """학습 가능한 정규화 3D 앵커 (K, 3), 좌표는 [0, 1]"""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64).reshape(-1, 3)
        if np.any((coords < 0.0) | (coords > 1.0)) or not np.all(np.isfinite(coords)):
            raise Pe3dError("앵커 좌표는 [0, 1] 범위여야 합니다")
        self.coords = coords.copy()

    @classmethod
    def random(cls, count: int, seed: int = 0) -> "AnchorPoints":
        return cls(make_rng(seed).uniform(0.0, 1.0, size=(count, 3)))

    @property
    def count(self) -> int:
        return int(self.coords.shape[0])

    def clamp_(self) -> None:
        np.clip(self.coords, 0.0, 1.0, out=self.coords)


def encode_anchors(anchors: AnchorPoints, mlp: MLPParams, spec: SineSpec) -> np.ndarray:
    """(K, C). 특징 PE 와 같은 점 인코더를 통과시킨다."""
    if mlp.in_dim != 3 * spec.half_dim:
        raise ShapeMismatch(f"앵커 인코더 입력 차원 {mlp.in_dim} 이 3*C/2 가 아닙니다")
    if anchors.count == 0:
        return np.zeros((0, mlp.out_dim))
    return encode_points(anchors.coords, mlp, spec)


@dataclass(eq=False)
class EncoderBank:
    """특징 점 인코더와 앵커 인코더 묶음

    shared 모드에서는 두 인코더가 같은 MLPParams 객체이고,
    separated 모드에서는 다른 시드로 독립 초기화된 복사본이다.
    """

    point: MLPParams
    anchor: MLPParams
    mode: EncoderMode

    @classmethod
    def create(cls, embed_dim: int, mode: EncoderMode = "shared", seed: int = 0) -> "EncoderBank":
        if mode not in ("shared", "separated"):
            raise Pe3dError(f"인코더 모드는 shared 또는 separated 입니다: {mode}")
        in_dim = 3 * (embed_dim // 2)
        point = MLPParams.init(in_dim, embed_dim, seed=seed)
        anchor = point if mode == "shared" else MLPParams.init(in_dim, embed_dim, seed=seed + 1)
        logger.debug(f"인코더 묶음 생성: mode={mode}, C={embed_dim}, seed={seed}")
        return cls(point=point, anchor=anchor, mode=mode)

    @property
    def shared(self) -> bool:
        return self.anchor is self.point
