"""해석적 깊이 렌더링, 희소 점 투영, 최근접 이웃 깊이 보간, LiDAR 시뮬레이션"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple
import logging

import numpy as np

from config.settings import settings
from pe3d.errors import EmptySparseMap, Pe3dError
from pe3d.geometry.camera import MIN_CAMERA_Z, CameraParams, project_points
from pe3d.geometry.grid import pixel_centers
from pe3d.simulation.primitives import SKY_CLASS
from pe3d.simulation.scene import SimScene

logger = logging.getLogger(__name__)

COMPLETION_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class RenderedView:
    """셀별 깊이 (무효 셀은 0), 유효 마스크, 표면 클래스, 교차한 프리미티브 인덱스 (-1 = 없음)"""

    depth: np.ndarray
    valid: np.ndarray
    class_map: np.ndarray
    primitive_map: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.depth.shape

    def object_mask(self, primitive_index: int) -> np.ndarray:
        return self.primitive_map == primitive_index


@dataclass(frozen=True, eq=False)
class SparseDepth:
    depth: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        if self.depth.shape != self.valid.shape:
            raise Pe3dError("깊이 맵과 유효 마스크 모양이 다릅니다")
        if np.any(~(self.depth[self.valid] > 0)) or not np.all(np.isfinite(self.depth[self.valid])):
            raise Pe3dError("유효 셀의 깊이는 유한한 양수여야 합니다")

    @property
    def fill_rate(self) -> float:
        return float(np.count_nonzero(self.valid)) / self.valid.size if self.valid.size else 0.0


def cast_pixels(scene: SimScene, cam: CameraParams, u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """픽셀 광선과 장면의 가장 가까운 교차 -> (카메라 깊이 (inf = 없음), 프리미티브 인덱스)

    방향 R K^-1 (u, v, 1) 의 카메라 z 성분이 1 이므로 광선 파라미터가 곧 깊이다.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    rays_cam = cam.k_inv @ np.stack([u, v, np.ones_like(u)])
    dirs = (cam.rotation @ rays_cam).T
    origins = np.broadcast_to(cam.center, dirs.shape)

    depth = np.full(u.shape, np.inf)
    index = np.full(u.shape, -1, dtype=np.int64)
    for i, primitive in enumerate(scene.primitives):
        t = primitive.intersect(origins, dirs)
        closer = t < depth
        depth = np.where(closer, t, depth)
        index = np.where(closer, i, index)
    return depth, index


def render_depth(
    scene: SimScene,
    cam: CameraParams,
    height: Optional[int] = None,
    width: Optional[int] = None,
    stride: int = settings.feature_stride,
) -> RenderedView:
    height = height or cam.height // stride
    width = width or cam.width // stride
    u, v = pixel_centers(height, width, stride)
    depth, index = cast_pixels(scene, cam, u, v)
    depth, index = depth.reshape(height, width), index.reshape(height, width)

    valid = np.isfinite(depth)
    class_ids = np.array([p.class_id for p in scene.primitives] + [SKY_CLASS])
    logger.debug(f"{cam.name}: 렌더링 {height}x{width}, 유효 셀 {np.count_nonzero(valid)}")
    return RenderedView(
        depth=np.where(valid, depth, 0.0),
        valid=valid,
        class_map=class_ids[index],
        primitive_map=index,
    )


def object_cell_counts(
    scene: SimScene, rig: Sequence[CameraParams], stride: int = settings.feature_stride
) -> np.ndarray:
    """객체별로 모든 뷰에서 보이는 특징 셀 수 (객체 순서)"""
    objects = scene.objects
    counts = np.zeros(len(objects), dtype=np.int64)
    for cam in rig:
        view = render_depth(scene, cam, stride=stride)
        for i, obj in enumerate(objects):
            counts[i] += np.count_nonzero(view.object_mask(obj.primitive_index))
    return counts


def project_sparse(
    points: np.ndarray,
    cam: CameraParams,
    height: Optional[int] = None,
    width: Optional[int] = None,
    stride: int = settings.feature_stride,
) -> SparseDepth:
    """점들을 특징 격자에 투영, 셀마다 가장 가까운 깊이만 남긴다 (z-buffer)"""
    height = height or cam.height // stride
    width = width or cam.width // stride
    depth = np.full(height * width, np.inf)

    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if points.shape[0]:
        u, v, z = project_points(points, cam)
        front = z > MIN_CAMERA_Z
        col = np.floor(np.where(front, u, -1.0) / stride)
        row = np.floor(np.where(front, v, -1.0) / stride)
        inside = front & (col >= 0) & (col < width) & (row >= 0) & (row < height)
        cells = row[inside].astype(np.int64) * width + col[inside].astype(np.int64)
        np.minimum.at(depth, cells, z[inside])

    depth = depth.reshape(height, width)
    valid = np.isfinite(depth)
    return SparseDepth(depth=np.where(valid, depth, 0.0), valid=valid)


def complete_depth(sparse: SparseDepth) -> np.ndarray:
    """최근접 유효 셀로 채우기. 동률이면 행 우선 순서가 앞선 셀."""
    if not sparse.valid.any():
        raise EmptySparseMap("유효한 셀이 없는 희소 깊이 맵입니다")
    h, w = sparse.depth.shape
    rows, cols = np.nonzero(sparse.valid)  # 행 우선 순서
    source = sparse.depth[rows, cols]

    grid_rows, grid_cols = np.divmod(np.arange(h * w), w)
    filled = np.empty(h * w)
    for start in range(0, h * w, COMPLETION_CHUNK):
        r = grid_rows[start:start + COMPLETION_CHUNK, None]
        c = grid_cols[start:start + COMPLETION_CHUNK, None]
        dist2 = (r - rows[None, :]) ** 2 + (c - cols[None, :]) ** 2
        filled[start:start + COMPLETION_CHUNK] = source[np.argmin(dist2, axis=1)]

    filled = filled.reshape(h, w)
    return np.where(sparse.valid, sparse.depth, filled)


def simulate_lidar(
    scene: SimScene,
    beams: int = settings.lidar_beams,
    azimuth_steps: int = settings.lidar_azimuth_steps,
    elevation_deg: Tuple[float, float] = (-30.0, 10.0),
    origin: Optional[np.ndarray] = None,
    max_range: float = 100.0,
) -> np.ndarray:
    """원점에서 회전형 LiDAR 광선을 쏘아 표면 교차점 (n, 3) 을 반환"""
    origin = np.zeros(3) if origin is None else np.asarray(origin, dtype=np.float64)
    elevation = np.deg2rad(np.linspace(elevation_deg[0], elevation_deg[1], beams))
    azimuth = np.linspace(0.0, 2.0 * np.pi, azimuth_steps, endpoint=False)
    el, az = np.meshgrid(elevation, azimuth, indexing="ij")
    dirs = np.stack([-np.cos(el) * np.sin(az), np.cos(el) * np.cos(az), np.sin(el)], axis=-1).reshape(-1, 3)
    origins = np.broadcast_to(origin, dirs.shape)

    t = np.full(dirs.shape[0], np.inf)
    for primitive in scene.primitives:
        t = np.minimum(t, primitive.intersect(origins, dirs))
    hit = t <= max_range
    logger.debug(f"LiDAR 시뮬레이션: {dirs.shape[0]} 광선 중 {np.count_nonzero(hit)} 교차")
    return origins[hit] + t[hit, None] * dirs[hit]
