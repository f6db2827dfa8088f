from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from config.settings import settings
from pe3d.errors import (
    BehindCamera,
    InvalidIntrinsics,
    InvalidRegion,
    InvalidRotation,
    NonInvertibleIntrinsics,
    NonPositiveDepth,
    OutOfRange,
)

DET_EPS = 1e-12
ORTHO_EPS = 1e-9
MIN_CAMERA_Z = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class CameraParams:
    """리그 좌표계 기준 핀홀 카메라 한 대

    rotation / translation 은 카메라 좌표계 -> 리그(LiDAR) 좌표계 변환이다.
    카메라 좌표계는 x 오른쪽, y 아래, z 전방.
    """

    intrinsics: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    width: int
    height: int
    name: str = "camera"
    k_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        K = _frozen(np.asarray(self.intrinsics, dtype=np.float64).reshape(3, 3))
        R = _frozen(np.asarray(self.rotation, dtype=np.float64).reshape(3, 3))
        T = _frozen(np.asarray(self.translation, dtype=np.float64).reshape(3))

        if not np.all(np.isfinite(K)) or abs(np.linalg.det(K)) <= DET_EPS:
            raise NonInvertibleIntrinsics(f"{self.name}: 내부 파라미터 행렬이 역행렬을 갖지 않습니다 (|det K| <= {DET_EPS})")
        if not np.array_equal(K[2], np.array([0.0, 0.0, 1.0])):
            raise InvalidIntrinsics(f"{self.name}: 내부 파라미터 마지막 행은 (0, 0, 1) 이어야 합니다")
        ortho_err = np.max(np.abs(R.T @ R - np.eye(3)))
        if not ortho_err < ORTHO_EPS or abs(np.linalg.det(R) - 1.0) > ORTHO_EPS:
            raise InvalidRotation(f"{self.name}: 회전 행렬이 정규직교가 아닙니다 (오차 {ortho_err:.3e})")
        if not np.all(np.isfinite(T)):
            raise InvalidRotation(f"{self.name}: 평행이동 벡터에 유한하지 않은 값이 있습니다")
        if self.width <= 0 or self.height <= 0:
            raise InvalidIntrinsics(f"{self.name}: 이미지 크기는 양수여야 합니다")

        object.__setattr__(self, "intrinsics", K)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", T)
        object.__setattr__(self, "k_inv", _frozen(np.linalg.inv(K)))

    @property
    def center(self) -> np.ndarray:
        """리그 좌표계에서의 광학 중심"""
        return self.translation


@dataclass(frozen=True)
class PerceptionRegion:
    """정규화 기준이 되는 축 정렬 3D 인지 영역 (미터)"""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float

    def __post_init__(self):
        for axis in ("x", "y", "z"):
            lo, hi = getattr(self, f"{axis}_min"), getattr(self, f"{axis}_max")
            if not hi > lo:
                raise InvalidRegion(f"{axis}_max({hi}) 는 {axis}_min({lo}) 보다 커야 합니다")

    @classmethod
    def default(cls) -> "PerceptionRegion":
        return cls(*settings.region_x, *settings.region_y, *settings.region_z)

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.x_min, self.y_min, self.z_min])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.x_max, self.y_max, self.z_max])

    @property
    def extent(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, point: np.ndarray) -> bool:
        point = np.asarray(point, dtype=np.float64)
        return bool(np.all(point >= self.lower) and np.all(point <= self.upper))

    def denormalize(self, normalized: np.ndarray) -> np.ndarray:
        """[0,1]^3 좌표를 미터 단위 리그 좌표로 되돌림"""
        return self.lower + np.asarray(normalized, dtype=np.float64) * self.extent


def back_project_points(u, v, depth, cam: CameraParams) -> np.ndarray:
    """픽셀 배열을 리그 좌표계 3D 점으로 변환 (..., 3)

    R K^-1 d (u, v, 1)^T + T 를 원소 단위 연산으로 계산하므로 배열 모양과
    무관하게 같은 픽셀은 항상 같은 비트 결과를 낸다.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    if np.any(~(depth > 0)):
        raise NonPositiveDepth("깊이는 0 보다 커야 합니다")

    Ki = cam.k_inv
    ray_x = Ki[0, 0] * u + Ki[0, 1] * v + Ki[0, 2]
    ray_y = Ki[1, 0] * u + Ki[1, 1] * v + Ki[1, 2]
    ray_z = Ki[2, 0] * u + Ki[2, 1] * v + Ki[2, 2]
    cx, cy, cz = depth * ray_x, depth * ray_y, depth * ray_z

    R, T = cam.rotation, cam.translation
    return np.stack(
        [R[i, 0] * cx + R[i, 1] * cy + R[i, 2] * cz + T[i] for i in range(3)],
        axis=-1,
    )


def project_points(points, cam: CameraParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """리그 좌표계 점 배열 (..., 3) -> (u, v, depth). 카메라 뒤쪽 점은 호출자가 걸러낸다."""
    points = np.asarray(points, dtype=np.float64)
    R, T, K = cam.rotation, cam.translation, cam.intrinsics
    dx = points[..., 0] - T[0]
    dy = points[..., 1] - T[1]
    dz = points[..., 2] - T[2]
    # R^T (p - T)
    x = R[0, 0] * dx + R[1, 0] * dy + R[2, 0] * dz
    y = R[0, 1] * dx + R[1, 1] * dy + R[2, 1] * dz
    z = R[0, 2] * dx + R[1, 2] * dy + R[2, 2] * dz
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (K[0, 0] * x + K[0, 1] * y + K[0, 2] * z) / z
        v = (K[1, 0] * x + K[1, 1] * y + K[1, 2] * z) / z
    return u, v, z


def back_project(u: float, v: float, depth: float, cam: CameraParams, strict: bool = False) -> np.ndarray:
    """픽셀 (u, v) 와 깊이를 리그 좌표계 3D 점으로 역투영"""
    if strict and not (0.0 <= u <= cam.width and 0.0 <= v <= cam.height):
        raise OutOfRange(f"{cam.name}: 픽셀 ({u}, {v}) 가 이미지 범위를 벗어났습니다")
    if not depth > 0:
        raise NonPositiveDepth(f"깊이는 0 보다 커야 합니다: {depth}")
    return back_project_points(u, v, depth, cam)


def project(point, cam: CameraParams) -> Tuple[float, float, float]:
    """리그 좌표계 3D 점을 (u, v, depth) 로 투영"""
    u, v, z = project_points(np.asarray(point, dtype=np.float64).reshape(3), cam)
    if not z > MIN_CAMERA_Z:
        raise BehindCamera(f"{cam.name}: 점이 카메라 뒤쪽에 있습니다 (z={float(z):.3e})")
    return float(u), float(v), float(z)
