"""해석적 광선 교차: 지면 평면, 구, 축 정렬 박스

모든 intersect 는 (n, 3) 원점/방향 배열을 받아 (n,) 광선 파라미터 t 를 돌려준다.
교차가 없으면 inf. 방향 벡터를 정규화하지 않으면 t 는 방향 길이 단위이다.
"""

from dataclasses import dataclass
from typing import Literal, Union

import numpy as np

from pe3d.errors import Pe3dError

T_MIN = 1e-9
GROUND_CLASS = 1
SKY_CLASS = 0


def _vec3(value) -> np.ndarray:
    array = np.asarray(value, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(array)):
        raise Pe3dError(f"좌표에 유한하지 않은 값이 있습니다: {value}")
    array.setflags(write=False)
    return array


def _nearest_positive(*candidates: np.ndarray) -> np.ndarray:
    best = np.full(candidates[0].shape, np.inf)
    for t in candidates:
        best = np.where((t > T_MIN) & (t < best), t, best)
    return best


@dataclass(frozen=True, eq=False)
class GroundPlane:
    z: float
    class_id: int = GROUND_CLASS
    is_object: bool = False
    kind: Literal["plane"] = "plane"

    def intersect(self, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (self.z - origins[:, 2]) / dirs[:, 2]
        return _nearest_positive(np.where(np.isfinite(t), t, np.inf))

    def distance(self, points: np.ndarray) -> np.ndarray:
        return np.abs(points[..., 2] - self.z)


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float
    class_id: int = 2
    is_object: bool = True
    kind: Literal["sphere"] = "sphere"

    def __post_init__(self):
        object.__setattr__(self, "center", _vec3(self.center))
        if not self.radius > 0:
            raise Pe3dError(f"구 반지름은 0 보다 커야 합니다: {self.radius}")

    @property
    def object_center(self) -> np.ndarray:
        return self.center

    def intersect(self, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        oc = origins - self.center
        a = np.sum(dirs * dirs, axis=1)
        b = 2.0 * np.sum(dirs * oc, axis=1)
        c = np.sum(oc * oc, axis=1) - self.radius ** 2
        disc = b * b - 4.0 * a * c
        hit = disc >= 0
        root = np.sqrt(np.where(hit, disc, 0.0))
        # 수치적으로 안정한 근의 공식
        q = -0.5 * (b + np.copysign(root, b))
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(hit, q / a, np.inf)
            t2 = np.where(hit & (q != 0), c / q, np.inf)
        return _nearest_positive(t1, t2)

    def distance(self, points: np.ndarray) -> np.ndarray:
        return np.abs(np.linalg.norm(points - self.center, axis=-1) - self.radius)


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray
    class_id: int = 2
    is_object: bool = True
    kind: Literal["box"] = "box"

    def __post_init__(self):
        object.__setattr__(self, "lo", _vec3(self.lo))
        object.__setattr__(self, "hi", _vec3(self.hi))
        if np.any(self.hi <= self.lo):
            raise Pe3dError("박스의 max 는 모든 축에서 min 보다 커야 합니다")

    @property
    def object_center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def intersect(self, origins: np.ndarray, dirs: np.ndarray) -> np.ndarray:
        """slab 방식"""
        near = np.full(origins.shape[0], -np.inf)
        far = np.full(origins.shape[0], np.inf)
        hit = np.ones(origins.shape[0], dtype=bool)
        for i in range(3):
            o, d = origins[:, i], dirs[:, i]
            parallel = d == 0.0
            hit &= ~(parallel & ((o < self.lo[i]) | (o > self.hi[i])))
            with np.errstate(divide="ignore", invalid="ignore"):
                i1 = (self.lo[i] - o) / d
                i2 = (self.hi[i] - o) / d
            far = np.where(parallel, far, np.minimum(far, np.maximum(i1, i2)))
            near = np.where(parallel, near, np.maximum(near, np.minimum(i1, i2)))
        hit &= near <= far
        # 원점이 박스 안이면 나가는 면까지
        return _nearest_positive(np.where(hit, near, np.inf), np.where(hit, far, np.inf))

    def distance(self, points: np.ndarray) -> np.ndarray:
        """표면까지의 거리 (내부는 가장 가까운 면까지)"""
        outside = np.maximum(np.maximum(self.lo - points, points - self.hi), 0.0)
        inside = np.minimum(points - self.lo, self.hi - points).min(axis=-1)
        return np.where(np.any(outside > 0, axis=-1), np.linalg.norm(outside, axis=-1), inside)


Primitive = Union[GroundPlane, Sphere, Box]
