"""뷰 하나에 대한 PE 격자 생성 (변형별 생성자)

모든 3D 변형은 리그 좌표계 점 -> 인지 영역 정규화 -> 인코딩 순서를 따른다.
영역을 벗어난 점은 잘라낸 좌표로 인코딩하고 마스크를 켠다.
"""

from dataclasses import dataclass
from typing import Literal, Optional, Tuple
import logging

import numpy as np

from config.settings import settings
from pe3d.depth.bins import DepthBins, parse_bins
from pe3d.depth.head import DepthDistribution
from pe3d.encoding.mlp import LinearParams, MLPParams
from pe3d.encoding.point_encoder import encode_point_sets
from pe3d.encoding.sine import SineSpec, sine_encode
from pe3d.errors import InvalidVariant, KTooLarge, Pe3dError, ShapeMismatch
from pe3d.geometry.camera import CameraParams, PerceptionRegion, back_project_points
from pe3d.geometry.grid import back_project_grid, normalize_grid, normalize_points, pixel_centers

logger = logging.getLogger(__name__)

Variant = Literal["pe2d", "camera-ray", "lidar-ray", "oracle-point", "depth-point", "topk"]
VARIANTS = ("pe2d", "camera-ray", "lidar-ray", "oracle-point", "depth-point", "topk")


@dataclass(frozen=True, eq=False)
class PEGrid:
    values: np.ndarray  # (C, H_F, W_F)
    variant: str
    mask: np.ndarray  # (H_F, W_F), True = 영역 밖 / 무효

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise InvalidVariant(f"알 수 없는 PE 변형: {self.variant}")
        if self.values.shape[1:] != self.mask.shape:
            raise ShapeMismatch(f"PE {self.values.shape} 와 마스크 {self.mask.shape} 모양이 다릅니다")
        if not np.all(np.isfinite(self.values)):
            raise Pe3dError("PE 값에 유한하지 않은 값이 있습니다")

    @property
    def channels(self) -> int:
        return int(self.values.shape[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape[1], self.values.shape[2]

    def tokens(self) -> np.ndarray:
        """(H_F * W_F, C), 행 우선 셀 순서"""
        return self.values.reshape(self.channels, -1).T


@dataclass(eq=False)
class TopkParams:
    """top-k PE: 공유 점 인코더 + k*C -> C 축소 선형층"""

    point: MLPParams
    reduce: LinearParams

    @classmethod
    def init(cls, point: MLPParams, k: int, seed: int = 0) -> "TopkParams":
        return cls(point=point, reduce=LinearParams.init(k * point.out_dim, point.out_dim, seed=seed))

    @property
    def k(self) -> int:
        return self.reduce.W.shape[0] // self.point.out_dim


def feature_shape(cam: CameraParams, stride: int) -> Tuple[int, int]:
    return cam.height // stride, cam.width // stride


def _to_grid(tokens: np.ndarray, h: int, w: int) -> np.ndarray:
    return np.ascontiguousarray(tokens.T.reshape(-1, h, w))


@dataclass(frozen=True, eq=False)
class PointSets:
    """셀별 정규화 점 집합 (H*W, m, 3) 과 셀 마스크 (H, W). 인코더 입력 그 자체."""

    points: np.ndarray
    mask: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.mask.shape

    @property
    def set_size(self) -> int:
        return int(self.points.shape[1])


def _ray_points(cam: CameraParams, depths: np.ndarray, stride: int) -> np.ndarray:
    """셀별 깊이 목록 (H, W, m) -> 리그 좌표 점 (H, W, m, 3)"""
    h, w = depths.shape[:2]
    u, v = pixel_centers(h, w, stride)
    return back_project_points(u[..., None], v[..., None], depths, cam)


def ray_point_sets(cam: CameraParams, depths: np.ndarray, region: PerceptionRegion, stride: int) -> PointSets:
    """셀 광선 위 m 개 점. 절반 넘는 점이 영역 밖이면 셀을 마스크한다."""
    h, w, m = depths.shape
    normalized, outside = normalize_points(_ray_points(cam, depths, stride), region)
    return PointSets(points=normalized.reshape(h * w, m, 3), mask=outside.sum(axis=-1) * 2 > m)


def camera_ray_sets(
    cam: CameraParams, bins: DepthBins, region: Optional[PerceptionRegion] = None, stride: int = settings.feature_stride
) -> PointSets:
    h, w = feature_shape(cam, stride)
    depths = np.broadcast_to(bins.centers, (h, w, bins.count))
    return ray_point_sets(cam, depths, region or PerceptionRegion.default(), stride)


def depth_point_sets(
    depth_map: np.ndarray,
    cam: CameraParams,
    region: Optional[PerceptionRegion] = None,
    stride: int = settings.feature_stride,
    valid: Optional[np.ndarray] = None,
    fill_depth: Optional[float] = None,
) -> PointSets:
    """깊이 맵의 셀별 3D 점 하나. valid 가 주어지면 무효 셀은 fill_depth 로 채우고 마스크한다."""
    region = region or PerceptionRegion.default()
    depth_map = np.asarray(depth_map, dtype=np.float64)
    if depth_map.shape != feature_shape(cam, stride):
        raise ShapeMismatch(f"깊이 맵 {depth_map.shape} 이 특징 격자 {feature_shape(cam, stride)} 와 다릅니다")
    invalid = np.zeros(depth_map.shape, dtype=bool)
    if valid is not None:
        invalid = ~np.asarray(valid, dtype=bool)
        fill = fill_depth if fill_depth is not None else parse_bins(settings.camera_bins).d_max
        depth_map = np.where(invalid, fill, depth_map)

    grid = normalize_grid(back_project_grid(depth_map, cam, stride), region)
    h, w = grid.shape
    return PointSets(points=np.moveaxis(grid.points, 0, -1).reshape(h * w, 1, 3), mask=grid.mask | invalid)


def encode_point_grid(sets: PointSets, mlp: MLPParams, variant: str) -> PEGrid:
    spec = SineSpec(half_dim=mlp.out_dim // 2)
    if mlp.in_dim != 3 * sets.set_size * spec.half_dim:
        raise ShapeMismatch(f"MLP 입력 차원 {mlp.in_dim} 이 3*{sets.set_size}*C/2 와 다릅니다")
    tokens, _ = encode_point_sets(sets.points, mlp, spec)
    h, w = sets.shape
    logger.debug(f"{variant}: 셀 {h}x{w}, 점 집합 크기 {sets.set_size}, 마스크 {int(np.count_nonzero(sets.mask))}")
    return PEGrid(values=_to_grid(tokens, h, w), variant=variant, mask=sets.mask)


def pe2d(height: int, width: int, embed_dim: int = settings.embed_dim) -> PEGrid:
    """정규화 픽셀 좌표 (u, v) 만의 sine 인코딩. 카메라 파라미터와 무관하다."""
    if embed_dim % 4:
        raise Pe3dError(f"pe2d 의 C 는 4 의 배수여야 합니다: {embed_dim}")
    spec = SineSpec(half_dim=embed_dim // 2)
    u, v = pixel_centers(height, width, 1.0)
    values = np.concatenate([sine_encode(u / width, spec), sine_encode(v / height, spec)], axis=-1)
    return PEGrid(
        values=np.ascontiguousarray(np.moveaxis(values, -1, 0)),
        variant="pe2d",
        mask=np.zeros((height, width), dtype=bool),
    )


def pe_camera_ray(
    cam: CameraParams,
    bins: DepthBins,
    mlp_ray: MLPParams,
    region: Optional[PerceptionRegion] = None,
    stride: int = settings.feature_stride,
    variant: str = "camera-ray",
) -> PEGrid:
    """셀별 N_D 개 광선 점을 깊이 오름차순으로 이어붙여 인코딩"""
    return encode_point_grid(camera_ray_sets(cam, bins, region, stride), mlp_ray, variant)


def pe_lidar_ray(
    cam: CameraParams,
    fixed_d: float,
    mlp: MLPParams,
    region: Optional[PerceptionRegion] = None,
    stride: int = settings.feature_stride,
) -> PEGrid:
    return pe_camera_ray(cam, DepthBins.single(fixed_d), mlp, region, stride, variant="lidar-ray")


def pe_oracle_point(
    gt_depth_map: np.ndarray,
    cam: CameraParams,
    region: Optional[PerceptionRegion],
    mlp: MLPParams,
    stride: int = settings.feature_stride,
    valid: Optional[np.ndarray] = None,
    fill_depth: Optional[float] = None,
) -> PEGrid:
    """정답 깊이의 3D 점 PE. 정답이 없는 셀은 fill_depth(기본 빈 범위 최대값)로 채우고 마스크한다."""
    sets = depth_point_sets(gt_depth_map, cam, region, stride, valid, fill_depth)
    return encode_point_grid(sets, mlp, "oracle-point")


def pe_depth_point(
    pred_depth_map: np.ndarray,
    cam: CameraParams,
    region: Optional[PerceptionRegion],
    mlp: MLPParams,
    stride: int = settings.feature_stride,
) -> PEGrid:
    return encode_point_grid(depth_point_sets(pred_depth_map, cam, region, stride), mlp, "depth-point")


def topk_bins(probs: np.ndarray, k: int) -> np.ndarray:
    """셀별 확률 내림차순 상위 k 빈 인덱스 (k, H, W). 동률은 낮은 인덱스 우선."""
    return np.argsort(-probs, axis=0, kind="stable")[:k]


def pe_topk(
    P: DepthDistribution,
    bins: DepthBins,
    k: int,
    cam: CameraParams,
    region: Optional[PerceptionRegion],
    params: TopkParams,
    stride: int = settings.feature_stride,
) -> PEGrid:
    """확률 상위 k 개 빈의 점을 공유 점 인코더로 인코딩해 이어붙인 뒤 선형층으로 C 차원 축소"""
    region = region or PerceptionRegion.default()
    if P.count != bins.count:
        raise ShapeMismatch(f"분포 빈 수 {P.count} 와 깊이 빈 수 {bins.count} 가 다릅니다")
    if not 1 <= k <= bins.count:
        raise KTooLarge(f"k={k} 는 1 이상 N_D={bins.count} 이하여야 합니다")
    if params.k != k:
        raise ShapeMismatch(f"축소층은 k={params.k} 용입니다 (요청 k={k})")
    h, w = P.probs.shape[1:]
    if (h, w) != feature_shape(cam, stride):
        raise ShapeMismatch(f"분포 격자 {(h, w)} 가 특징 격자 {feature_shape(cam, stride)} 와 다릅니다")

    spec = SineSpec(half_dim=params.point.out_dim // 2)
    depths = np.moveaxis(bins.centers[topk_bins(P.probs, k)], 0, -1)
    sets = ray_point_sets(cam, depths, region, stride)
    encoded, _ = encode_point_sets(sets.points.reshape(h * w * k, 1, 3), params.point, spec)
    tokens = params.reduce.forward(encoded.reshape(h * w, k * params.point.out_dim))
    return PEGrid(values=_to_grid(tokens, h, w), variant="topk", mask=sets.mask)
