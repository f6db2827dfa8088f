"""PE 변형 지정, 변형별 인코더 묶음, 장면 토큰 구성"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from config.settings import settings
from pe3d.depth.bins import DepthBins, parse_bins
from pe3d.depth.head import DepthDistribution
from pe3d.encoding.anchors import EncoderBank
from pe3d.encoding.mlp import MLPParams
from pe3d.encoding.pe_grid import (
    VARIANTS,
    PEGrid,
    TopkParams,
    camera_ray_sets,
    depth_point_sets,
    pe2d,
    pe_camera_ray,
    pe_depth_point,
    pe_lidar_ray,
    pe_oracle_point,
    pe_topk,
)
from pe3d.encoding.point_encoder import encode_point_sets
from pe3d.encoding.sine import SineSpec
from pe3d.errors import InvalidVariant
from pe3d.geometry.camera import CameraParams, PerceptionRegion
from pe3d.simulation.renderer import RenderedView

logger = logging.getLogger(__name__)

# 광선 PE 입력은 3 * N_D * C/2 폭이라 행 묶음 단위로 인코딩한다
PE_CHUNK = 2048


@dataclass(frozen=True)
class VariantSpec:
    """ablation 셀 하나의 PE 설정

    문자열 형식: `pe2d`, `camera-ray:lid:1:61:64`, `lidar-ray:15`,
    `oracle-point`, `depth-point`, `topk:5`
    """

    kind: str
    bins: Optional[str] = None
    fixed_d: Optional[float] = None
    k: Optional[int] = None
    encoder_mode: str = "shared"
    loss_weights: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.kind not in VARIANTS:
            raise InvalidVariant(f"알 수 없는 PE 변형: {self.kind} (가능: {', '.join(VARIANTS)})")
        if self.kind == "camera-ray" and self.bins is None:
            object.__setattr__(self, "bins", settings.camera_bins)
        if self.kind == "camera-ray":
            parse_bins(self.bins)
        if self.kind == "lidar-ray" and not (self.fixed_d and self.fixed_d > 0):
            raise InvalidVariant("lidar-ray 는 양의 고정 깊이가 필요합니다 (예: lidar-ray:15)")
        if self.kind == "topk" and self.k is None:
            object.__setattr__(self, "k", settings.topk)
        if self.encoder_mode not in ("shared", "separated"):
            raise InvalidVariant(f"인코더 모드는 shared 또는 separated 입니다: {self.encoder_mode}")

    @classmethod
    def parse(cls, text: str, **overrides) -> "VariantSpec":
        kind, _, rest = text.strip().partition(":")
        try:
            if kind == "camera-ray":
                return cls(kind, bins=rest or None, **overrides)
            if kind == "lidar-ray":
                return cls(kind, fixed_d=float(rest), **overrides)
            if kind == "topk":
                return cls(kind, k=int(rest) if rest else None, **overrides)
        except ValueError as e:
            raise InvalidVariant(f"변형 지정 형식이 잘못되었습니다: {text!r}") from e
        if rest:
            raise InvalidVariant(f"{kind} 는 추가 파라미터를 받지 않습니다: {text!r}")
        return cls(kind, **overrides)

    @property
    def needs_depth_head(self) -> bool:
        return self.kind in ("depth-point", "topk")

    @property
    def params(self) -> str:
        parts = []
        if self.kind == "camera-ray":
            parts.append(self.bins)
        elif self.kind == "lidar-ray":
            parts.append(f"d={self.fixed_d:g}")
        elif self.kind == "topk":
            parts.append(f"k={self.k}")
        if self.encoder_mode != "shared":
            parts.append(f"encoder={self.encoder_mode}")
        if self.loss_weights is not None:
            parts.append(f"lsm={self.loss_weights[0]:g},ldfl={self.loss_weights[1]:g}")
        return ";".join(parts)


@dataclass(eq=False)
class VariantEncoders:
    """변형에 필요한 인코더. 특징 PE 인코더는 camera-ray 면 광선 MLP, 나머지는 공유 점 인코더."""

    bank: EncoderBank
    ray: Optional[MLPParams] = None
    topk: Optional[TopkParams] = None

    @classmethod
    def create(cls, variant: VariantSpec, embed_dim: int, seed: int) -> "VariantEncoders":
        bank = EncoderBank.create(embed_dim, variant.encoder_mode, seed)
        ray = topk = None
        if variant.kind == "camera-ray":
            count = parse_bins(variant.bins).count
            ray = MLPParams.init(3 * count * (embed_dim // 2), embed_dim, seed=seed + 2)
            logger.debug(f"카메라 광선 인코더: 빈 {count}개, 입력 {ray.in_dim}차원")
        if variant.kind == "topk":
            topk = TopkParams.init(bank.point, variant.k, seed=seed + 3)
        return cls(bank=bank, ray=ray, topk=topk)

    @property
    def spec(self) -> SineSpec:
        return SineSpec(half_dim=self.bank.point.out_dim // 2)

    @property
    def feature(self) -> MLPParams:
        return self.ray if self.ray is not None else self.bank.point

    @property
    def anchor(self) -> MLPParams:
        return self.bank.anchor

    def trainable(self) -> Dict[str, MLPParams]:
        """학습 대상 인코더. 앵커 인코더가 특징 인코더와 같은 객체면 하나로 묶인다."""
        groups = {"feature": self.feature}
        if self.anchor is not self.feature:
            groups["anchor"] = self.anchor
        return groups

    def arrays(self) -> Dict[str, np.ndarray]:
        arrays = {}
        for name, mlp in self.trainable().items():
            arrays.update(mlp.arrays(prefix=f"enc.{name}."))
        return arrays


@dataclass(eq=False)
class ViewData:
    cam: CameraParams
    rendered: RenderedView
    features: np.ndarray  # (C, H, W)
    pred_depth: Optional[np.ndarray] = None
    probs: Optional[DepthDistribution] = None


@dataclass(eq=False)
class SceneTokens:
    """장면 하나의 토큰. PE 는 point_sets 를 인코딩하거나 (학습 가능) fixed_pe 를 그대로 쓴다."""

    features: np.ndarray  # (N, C)
    mask: np.ndarray  # (N,)
    centers: np.ndarray  # (M, 3) 정규화 정답 중심
    point_sets: Optional[np.ndarray] = None  # (N, m, 3)
    fixed_pe: Optional[np.ndarray] = None  # (N, C)


def _view_pe_input(
    variant: VariantSpec,
    view: ViewData,
    encoders: VariantEncoders,
    region: PerceptionRegion,
    stride: int,
    head_bins: Optional[DepthBins],
):
    """(PointSets, None) 또는 (None, (고정 PE 토큰, 마스크))"""
    cam, rendered = view.cam, view.rendered
    if variant.kind == "pe2d":
        h, w = rendered.shape
        grid = pe2d(h, w, encoders.feature.out_dim)
        return None, (grid.tokens(), grid.mask.ravel())
    if variant.kind == "camera-ray":
        return camera_ray_sets(cam, parse_bins(variant.bins), region, stride), None
    if variant.kind == "lidar-ray":
        return camera_ray_sets(cam, DepthBins.single(variant.fixed_d), region, stride), None
    if variant.kind == "oracle-point":
        return depth_point_sets(rendered.depth, cam, region, stride, valid=rendered.valid), None
    if variant.kind == "depth-point":
        return depth_point_sets(view.pred_depth, cam, region, stride), None
    grid = pe_topk(view.probs, head_bins, variant.k, cam, region, encoders.topk, stride)
    return None, (grid.tokens(), grid.mask.ravel())


def build_scene_tokens(
    variant: VariantSpec,
    views: Sequence[ViewData],
    centers: np.ndarray,
    encoders: VariantEncoders,
    region: PerceptionRegion,
    stride: int = settings.feature_stride,
    head_bins: Optional[DepthBins] = None,
) -> SceneTokens:
    features, masks, sets, fixed = [], [], [], []
    for view in views:
        c = view.features.shape[0]
        features.append(view.features.reshape(c, -1).T)
        point_sets, pe = _view_pe_input(variant, view, encoders, region, stride, head_bins)
        if point_sets is not None:
            sets.append(point_sets.points)
            masks.append(point_sets.mask.ravel())
        else:
            fixed.append(pe[0])
            masks.append(pe[1])

    normalized = (np.asarray(centers, dtype=np.float64).reshape(-1, 3) - region.lower) / region.extent
    return SceneTokens(
        features=np.concatenate(features),
        mask=np.concatenate(masks),
        centers=normalized,
        point_sets=np.concatenate(sets) if sets else None,
        fixed_pe=np.concatenate(fixed) if fixed else None,
    )


@dataclass(eq=False)
class TokenBatch:
    features: np.ndarray  # (S, N, C)
    mask: np.ndarray  # (S, N)
    centers: List[np.ndarray]
    point_sets: Optional[np.ndarray] = None  # (S, N, m, 3)
    fixed_pe: Optional[np.ndarray] = None  # (S, N, C)

    @classmethod
    def stack(cls, scenes: Sequence[SceneTokens]) -> "TokenBatch":
        first = scenes[0]
        return cls(
            features=np.stack([s.features for s in scenes]),
            mask=np.stack([s.mask for s in scenes]),
            centers=[s.centers for s in scenes],
            point_sets=np.stack([s.point_sets for s in scenes]) if first.point_sets is not None else None,
            fixed_pe=np.stack([s.fixed_pe for s in scenes]) if first.fixed_pe is not None else None,
        )

    @property
    def size(self) -> int:
        return int(self.features.shape[0])


def batch_pe(batch: TokenBatch, encoders: VariantEncoders) -> np.ndarray:
    """(S, N, C) PE 토큰"""
    if batch.point_sets is None:
        return batch.fixed_pe
    s, n, m, _ = batch.point_sets.shape
    flat = batch.point_sets.reshape(s * n, m, 3)
    chunks = [
        encode_point_sets(flat[start:start + PE_CHUNK], encoders.feature, encoders.spec)[0]
        for start in range(0, s * n, PE_CHUNK)
    ]
    return np.concatenate(chunks).reshape(s, n, -1)


def view_pe_grid(
    variant: VariantSpec,
    view: ViewData,
    encoders: VariantEncoders,
    region: PerceptionRegion,
    stride: int = settings.feature_stride,
    head_bins: Optional[DepthBins] = None,
) -> PEGrid:
    """뷰 하나의 PE 격자 (내보내기 / 유사도 맵용)"""
    cam, rendered = view.cam, view.rendered
    if variant.kind == "pe2d":
        return pe2d(*rendered.shape, encoders.feature.out_dim)
    if variant.kind == "camera-ray":
        return pe_camera_ray(cam, parse_bins(variant.bins), encoders.ray, region, stride)
    if variant.kind == "lidar-ray":
        return pe_lidar_ray(cam, variant.fixed_d, encoders.feature, region, stride)
    if variant.kind == "oracle-point":
        return pe_oracle_point(rendered.depth, cam, region, encoders.feature, stride, valid=rendered.valid)
    if variant.kind == "depth-point":
        return pe_depth_point(view.pred_depth, cam, region, encoders.feature, stride)
    return pe_topk(view.probs, head_bins, variant.k, cam, region, encoders.topk, stride)
