"""깊이 구간 이산화 (UD / LID / SID) 와 구간 브래킷

세 방식 모두 d_min, d_max 를 양 끝 중심으로 고정한다. 등간격(UD)에서
d_delta = (d_max - d_min) / (N_D - 1) 이다.
"""

from dataclasses import dataclass
from typing import Literal, Tuple

import numpy as np

from pe3d.errors import InvalidRange, OutOfRange, Pe3dError, TooFewBins

Method = Literal["UD", "LID", "SID", "FIXED"]
METHODS = ("UD", "LID", "SID")


@dataclass(frozen=True, eq=False)
class DepthBins:
    method: str
    d_min: float
    d_max: float
    centers: np.ndarray

    @property
    def count(self) -> int:
        return int(self.centers.shape[0])

    @property
    def spec(self) -> str:
        if self.method == "FIXED":
            return f"fixed:{self.d_min:g}"
        return f"{self.method.lower()}:{self.d_min:g}:{self.d_max:g}:{self.count}"

    @classmethod
    def single(cls, depth: float) -> "DepthBins":
        """LiDAR-ray PE 용 단일 깊이 빈"""
        if not depth > 0:
            raise InvalidRange(f"고정 깊이는 0 보다 커야 합니다: {depth}")
        centers = np.array([float(depth)])
        centers.setflags(write=False)
        return cls(method="FIXED", d_min=float(depth), d_max=float(depth), centers=centers)


def make_bins(method: str, d_min: float, d_max: float, count: int) -> DepthBins:
    method = method.upper()
    if method not in METHODS:
        raise InvalidRange(f"지원하지 않는 이산화 방식: {method}")
    if not (0 < d_min < d_max) or not np.isfinite(d_max):
        raise InvalidRange(f"깊이 범위가 잘못되었습니다: [{d_min}, {d_max}]")
    if count < 2:
        raise TooFewBins(f"깊이 빈은 2개 이상이어야 합니다: {count}")

    i = np.arange(count, dtype=np.float64)
    n = count - 1
    if method == "UD":
        centers = d_min + i * (d_max - d_min) / n
    elif method == "LID":
        centers = d_min + (d_max - d_min) * i * (i + 1) / (n * count)
    else:
        centers = np.exp(np.log(d_min) + (i / n) * np.log(d_max / d_min))

    # 양 끝점 고정
    centers[0], centers[-1] = d_min, d_max
    centers.setflags(write=False)
    return DepthBins(method=method, d_min=float(d_min), d_max=float(d_max), centers=centers)


def parse_bins(text: str) -> DepthBins:
    """`ud:1:61:64` 형식 문자열 파싱"""
    parts = text.strip().split(":")
    try:
        if parts[0].lower() == "fixed" and len(parts) == 2:
            return DepthBins.single(float(parts[1]))
        if len(parts) != 4:
            raise ValueError(text)
        return make_bins(parts[0], float(parts[1]), float(parts[2]), int(parts[3]))
    except Pe3dError:
        raise
    except ValueError as e:
        raise InvalidRange(f"빈 지정 형식은 method:min:max:count 입니다: {text!r}") from e


def bracket_many(depth: np.ndarray, bins: DepthBins) -> Tuple[np.ndarray, np.ndarray]:
    """벡터화된 bracket: (하단 인덱스 i, 가중치 w). 상단 인덱스는 i + 1."""
    centers = bins.centers
    if bins.count < 2:
        raise TooFewBins("브래킷에는 2개 이상의 빈이 필요합니다")
    depth = np.asarray(depth, dtype=np.float64)
    if np.any((depth < bins.d_min) | (depth > bins.d_max) | ~np.isfinite(depth)):
        raise OutOfRange(f"깊이가 빈 범위 [{bins.d_min}, {bins.d_max}] 를 벗어났습니다")

    lower = np.searchsorted(centers, depth, side="right") - 1
    lower = np.clip(lower, 0, bins.count - 2)
    upper_d = centers[lower + 1]
    weight = (upper_d - depth) / (upper_d - centers[lower])
    return lower, weight


def bracket(d: float, bins: DepthBins) -> Tuple[int, int, float]:
    lower, weight = bracket_many(np.array([d]), bins)
    i = int(lower[0])
    return i, i + 1, float(weight[0])
