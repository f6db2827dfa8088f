"""3D 점 인지 특징: 이미지 특징 F 에 PE 를 원소별로 더해 모든 카메라를 한 토큰열로 펼친다"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from pe3d.depth.bins import parse_bins
from pe3d.encoding.mlp import make_rng
from pe3d.encoding.pe_grid import PEGrid
from pe3d.errors import Pe3dError, ShapeMismatch
from pe3d.simulation.renderer import RenderedView


@dataclass(frozen=True, eq=False)
class PointAwareFeatures:
    """values (C, N), mask (N,) True = 어텐션 제외. views 는 뷰별 (시작 토큰, H, W)."""

    values: np.ndarray
    mask: np.ndarray
    views: Tuple[Tuple[int, int, int], ...]

    @property
    def tokens(self) -> np.ndarray:
        return self.values.T

    @property
    def count(self) -> int:
        return int(self.values.shape[1])

    def view_slice(self, index: int) -> slice:
        start, h, w = self.views[index]
        return slice(start, start + h * w)


def fuse_features(
    features: Sequence[np.ndarray],
    pe_grids: Sequence[PEGrid],
    feature_masks: Optional[Sequence[np.ndarray]] = None,
) -> PointAwareFeatures:
    """F^3D = F + PE (뷰별), 마스크는 OR 결합, 뷰 순서대로 행 우선 토큰 연결"""
    if len(features) != len(pe_grids):
        raise ShapeMismatch(f"특징 뷰 수 {len(features)} 와 PE 뷰 수 {len(pe_grids)} 가 다릅니다")
    values, masks, views = [], [], []
    start = 0
    for i, (feat, pe) in enumerate(zip(features, pe_grids)):
        feat = np.asarray(feat, dtype=np.float64)
        if feat.shape != pe.values.shape:
            raise ShapeMismatch(f"뷰 {i}: 특징 {feat.shape} 과 PE {pe.values.shape} 모양이 다릅니다")
        mask = pe.mask
        if feature_masks is not None:
            mask = mask | np.asarray(feature_masks[i], dtype=bool)
        c, h, w = feat.shape
        values.append((feat + pe.values).reshape(c, h * w))
        masks.append(mask.reshape(h * w))
        views.append((start, h, w))
        start += h * w
    return PointAwareFeatures(
        values=np.concatenate(values, axis=1),
        mask=np.concatenate(masks),
        views=tuple(views),
    )


class FeatureEmbedder:
    """백본 출력 대용 특징: 표면 클래스 임베딩 + 잡음 섞인 정규화 깊이 단서

    F[cell] = E[class] + cue * e_depth + feature_noise * n,
    cue = clip(depth / max_depth) + noise (하늘은 0), n 은 모든 성분에 독립인 표준 정규 잡음.
    학습 중 고정되므로 위치 정보는 PE 로만 들어온다.
    """

    def __init__(
        self,
        embed_dim: int = settings.embed_dim,
        num_classes: int = 2 + settings.num_object_classes,
        seed: int = 0,
        noise: float = settings.depth_cue_noise,
        max_depth: Optional[float] = None,
        feature_noise: float = settings.feature_noise,
    ):
        rng = make_rng(seed)
        self.embed_dim = embed_dim
        self.table = rng.normal(0.0, 1.0 / np.sqrt(embed_dim), size=(num_classes, embed_dim))
        direction = rng.normal(size=embed_dim)
        self.depth_axis = direction / np.linalg.norm(direction)
        self.noise = noise
        self.feature_noise = feature_noise
        self.max_depth = max_depth or parse_bins(settings.camera_bins).d_max

    @property
    def num_classes(self) -> int:
        return int(self.table.shape[0])

    def embed(self, view: RenderedView, rng: np.random.Generator) -> np.ndarray:
        """(C, H, W)"""
        if view.class_map.min() < 0 or view.class_map.max() >= self.num_classes:
            raise Pe3dError(
                f"클래스 id 는 0 이상 {self.num_classes - 1} 이하여야 합니다: "
                f"{int(view.class_map.min())}..{int(view.class_map.max())}"
            )
        cue = np.clip(view.depth / self.max_depth, 0.0, 1.0)
        cue = np.where(view.valid, cue + self.noise * rng.standard_normal(view.depth.shape), 0.0)
        feats = self.table[view.class_map] + cue[..., None] * self.depth_axis
        if self.feature_noise:
            feats = feats + self.feature_noise * rng.standard_normal(feats.shape)
        return np.ascontiguousarray(np.moveaxis(feats, -1, 0))

    def embed_views(self, views: Sequence[RenderedView], rng: np.random.Generator) -> List[np.ndarray]:
        return [self.embed(view, rng) for view in views]
