from dataclasses import dataclass
from typing import Literal, Tuple

import numpy as np

from pe3d.errors import NonPositiveDepth, Pe3dError, ShapeMismatch
from pe3d.geometry.camera import CameraParams, PerceptionRegion, back_project_points

Frame = Literal["metric-rig", "normalized"]


@dataclass(frozen=True, eq=False)
class PointGrid3D:
    """한 카메라 뷰의 셀별 3D 좌표 (3, H_F, W_F) 와 영역 이탈 마스크"""

    points: np.ndarray
    frame: Frame
    mask: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.points.shape[1], self.points.shape[2]


def pixel_centers(height: int, width: int, stride: float) -> Tuple[np.ndarray, np.ndarray]:
    """특징 셀 (a, b) 의 픽셀 중심 u=(a+0.5)*stride, v=(b+0.5)*stride, 각 (H, W)"""
    if stride < 1:
        raise Pe3dError(f"stride 는 1 이상이어야 합니다: {stride}")
    cols = (np.arange(width, dtype=np.float64) + 0.5) * stride
    rows = (np.arange(height, dtype=np.float64) + 0.5) * stride
    u, v = np.meshgrid(cols, rows)
    return u, v


def back_project_grid(depth_map: np.ndarray, cam: CameraParams, stride: float) -> PointGrid3D:
    depth_map = np.asarray(depth_map, dtype=np.float64)
    if depth_map.ndim != 2:
        raise ShapeMismatch(f"깊이 맵은 2차원이어야 합니다: {depth_map.shape}")
    if np.any(~(depth_map > 0)):
        raise NonPositiveDepth("깊이 맵의 모든 값은 0 보다 커야 합니다")

    u, v = pixel_centers(depth_map.shape[0], depth_map.shape[1], stride)
    points = back_project_points(u, v, depth_map, cam)
    return PointGrid3D(
        points=np.moveaxis(points, -1, 0),
        frame="metric-rig",
        mask=np.zeros(depth_map.shape, dtype=bool),
    )


def normalize_points(points: np.ndarray, region: PerceptionRegion) -> Tuple[np.ndarray, np.ndarray]:
    """(..., 3) 점을 [0,1]^3 으로 정규화, 범위를 벗어난 좌표는 잘라내고 마스크로 표시"""
    normalized = (np.asarray(points, dtype=np.float64) - region.lower) / region.extent
    outside = np.any((normalized < 0.0) | (normalized > 1.0), axis=-1)
    return np.clip(normalized, 0.0, 1.0), outside


def normalize_grid(grid: PointGrid3D, region: PerceptionRegion) -> PointGrid3D:
    if grid.frame != "metric-rig":
        raise Pe3dError("이미 정규화된 격자입니다")
    normalized, outside = normalize_points(np.moveaxis(grid.points, 0, -1), region)
    return PointGrid3D(
        points=np.moveaxis(normalized, -1, 0),
        frame="normalized",
        mask=grid.mask | outside,
    )
