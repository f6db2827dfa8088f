"""카메라 광선과 LiDAR 광선 사이의 각도 불일치 모델 및 광선형 PE 점 집합

평면(위에서 본) 모델: LiDAR 는 원점, 카메라는 시선 방향으로 d_Lc, 수직 방향으로
delta 만큼 떨어져 있다. 카메라 시선 기준 방위각 alpha_c, 깊이 d 인 점을 원점에서 본
방향과 카메라 광선 방향의 사잇각 코사인으로 불일치를 정의한다.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from pe3d.depth.bins import DepthBins
from pe3d.errors import InvalidRange
from pe3d.geometry.camera import CameraParams, back_project, back_project_points


@dataclass(frozen=True)
class RayGeometry:
    alpha_c: float
    d: float
    d_lc: float
    delta: float

    def __post_init__(self):
        if not self.d > 0:
            raise InvalidRange(f"깊이 d 는 0 보다 커야 합니다: {self.d}")
        if self.d_lc < 0 or self.delta < 0:
            raise InvalidRange("카메라-LiDAR 오프셋은 음수일 수 없습니다")
        if not abs(self.alpha_c) < np.pi / 2:
            raise InvalidRange(f"|alpha_c| 는 pi/2 보다 작아야 합니다: {self.alpha_c}")


def _one_minus_cos(angle):
    # 1 - cos(x) = 2 sin^2(x/2), 작은 각에서 상쇄 오차 없음
    return 2.0 * np.sin(0.5 * angle) ** 2


def discrepancy(g: RayGeometry) -> float:
    lidar_angle = np.arctan((np.tan(g.alpha_c) + g.delta / g.d) / (1.0 + g.d_lc / g.d))
    return float(_one_minus_cos(g.alpha_c - lidar_angle))


def discrepancy_many(alpha_c: float, d: np.ndarray, d_lc: float, delta: float) -> np.ndarray:
    """discrepancy 의 벡터화 버전 (d 배열)"""
    d = np.asarray(d, dtype=np.float64)
    if np.any(~(d > 0)):
        raise InvalidRange("깊이 d 는 0 보다 커야 합니다")
    RayGeometry(alpha_c, float(d.min(initial=1.0)), d_lc, delta)  # 파라미터 검증
    lidar_angle = np.arctan((np.tan(alpha_c) + delta / d) / (1.0 + d_lc / d))
    return _one_minus_cos(alpha_c - lidar_angle)


def discrepancy_from_vectors(g: RayGeometry) -> float:
    """명시적 2D 벡터로 계산한 불일치 (검증용)

    x 축은 시선 수직, y 축은 시선 방향. 카메라 중심 (delta, d_lc).
    """
    camera_dir = np.array([np.tan(g.alpha_c), 1.0])
    point = np.array([g.delta, g.d_lc]) + g.d * camera_dir
    angle = np.arctan2(
        camera_dir[0] * point[1] - camera_dir[1] * point[0],
        camera_dir @ point,
    )
    return float(_one_minus_cos(angle))


def discrepancy_sweep(
    alpha_c: float, d_lc: float, delta: float, d_min: float, d_max: float, steps: int
) -> Tuple[np.ndarray, np.ndarray]:
    if not 0 < d_min <= d_max or steps < 1:
        raise InvalidRange(f"스윕 범위가 잘못되었습니다: {d_min}:{d_max}:{steps}")
    d = np.linspace(d_min, d_max, steps)
    return d, discrepancy_many(alpha_c, d, d_lc, delta)


def camera_ray_points(u: float, v: float, cam: CameraParams, bins: DepthBins) -> np.ndarray:
    """픽셀 광선 위의 N_D 개 점 (N_D, 3), 깊이 오름차순"""
    n = bins.count
    return back_project_points(np.full(n, float(u)), np.full(n, float(v)), bins.centers, cam)


def lidar_ray_point(u: float, v: float, cam: CameraParams, fixed_d: float) -> np.ndarray:
    """고정 깊이 점 하나 (1, 3). 원점(LiDAR)과 함께 LiDAR 광선을 정한다."""
    return back_project(u, v, fixed_d, cam).reshape(1, 3)
