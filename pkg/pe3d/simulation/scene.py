"""6 카메라 서라운드 리그와 해석적 장면

리그 좌표계: x 오른쪽, y 전방, z 위. 원점은 가상 LiDAR.
카메라 i 는 yaw = 60 * i 도로 회전하며 이름은 nuScenes 관례를 따른다.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from pe3d.errors import Pe3dError
from pe3d.geometry.camera import CameraParams, PerceptionRegion
from pe3d.simulation.primitives import Box, GroundPlane, Primitive, Sphere

CAMERA_NAMES = (
    "CAM_FRONT",
    "CAM_FRONT_LEFT",
    "CAM_BACK_LEFT",
    "CAM_BACK",
    "CAM_BACK_RIGHT",
    "CAM_FRONT_RIGHT",
)
YAW_STEP_DEG = 60.0

# 전방 카메라: 카메라 (x 오른쪽, y 아래, z 전방) -> 리그 (x 오른쪽, y 전방, z 위)
FRONT_ROTATION = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])


def yaw_matrix(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def default_intrinsics(
    focal: float = settings.focal_length,
    width: int = settings.image_width,
    height: int = settings.image_height,
) -> np.ndarray:
    return np.array([[focal, 0.0, width / 2.0], [0.0, focal, height / 2.0], [0.0, 0.0, 1.0]])


def default_rig(
    d_lc: float = settings.camera_forward_offset,
    delta: float = settings.camera_lateral_offset,
    intrinsics: Optional[np.ndarray] = None,
    width: int = settings.image_width,
    height: int = settings.image_height,
) -> List[CameraParams]:
    """60 도 간격 6 대 카메라. 각 카메라는 시선 방향으로 d_lc, 오른쪽으로 delta 떨어져 있다."""
    if d_lc < 0 or delta < 0:
        raise Pe3dError("카메라 오프셋은 음수일 수 없습니다")
    K = default_intrinsics(width=width, height=height) if intrinsics is None else intrinsics
    cameras = []
    for i, name in enumerate(CAMERA_NAMES):
        yaw = np.deg2rad(YAW_STEP_DEG * i)
        Rz = yaw_matrix(yaw)
        cameras.append(
            CameraParams(
                intrinsics=K,
                rotation=Rz @ FRONT_ROTATION,
                translation=Rz @ np.array([delta, d_lc, 0.0]),
                width=width,
                height=height,
                name=name,
            )
        )
    return cameras


def camera_yaw(cam: CameraParams) -> float:
    """광축의 리그 평면 방위각 (라디안, +y 기준 반시계)"""
    axis = cam.rotation[:, 2]
    return float(np.arctan2(-axis[0], axis[1]))


@dataclass(frozen=True)
class SceneObject:
    center: np.ndarray
    class_id: int
    primitive_index: int


@dataclass(frozen=True, eq=False)
class SimScene:
    primitives: Tuple[Primitive, ...]
    region: PerceptionRegion = field(default_factory=PerceptionRegion.default)

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        for obj in self.objects:
            if not self.region.contains(obj.center):
                raise Pe3dError(f"객체 중심 {obj.center.tolist()} 이 인지 영역 밖입니다")

    @property
    def objects(self) -> List[SceneObject]:
        return [
            SceneObject(center=np.asarray(p.object_center), class_id=p.class_id, primitive_index=i)
            for i, p in enumerate(self.primitives)
            if p.is_object
        ]

    def centers(self) -> np.ndarray:
        objects = self.objects
        if not objects:
            return np.zeros((0, 3))
        return np.stack([o.center for o in objects])


def place_object(
    azimuth: float,
    distance: float,
    kind: str = "box",
    size: float = 1.0,
    class_id: int = 2,
    ground_z: float = settings.ground_z,
) -> Primitive:
    """지면 위에 놓인 객체. azimuth 는 +y 기준 반시계 (라디안)."""
    x, y = -distance * np.sin(azimuth), distance * np.cos(azimuth)
    if kind == "sphere":
        return Sphere(center=(x, y, ground_z + size), radius=size, class_id=class_id)
    if kind == "box":
        half = size
        return Box(
            lo=(x - half, y - half, ground_z),
            hi=(x + half, y + half, ground_z + 2.0 * half),
            class_id=class_id,
        )
    raise Pe3dError(f"지원하지 않는 객체 종류: {kind}")


def front_object_scene(distance: float = 10.0, ground_z: float = settings.ground_z) -> SimScene:
    """전방 카메라에만 보이는 객체 하나"""
    return SimScene(primitives=(GroundPlane(ground_z), place_object(0.0, distance, "box", 0.5, ground_z=ground_z)))


def random_scene(
    rng: np.random.Generator,
    num_objects: int = 1,
    ground_z: float = settings.ground_z,
    min_distance: float = settings.object_min_distance,
    max_distance: float = settings.object_max_distance,
    num_classes: int = settings.num_object_classes,
) -> SimScene:
    """지면 + 무작위 방위/거리 객체. 객체끼리 겹치지 않도록 방위를 나눠 배치한다."""
    if num_objects < 0:
        raise Pe3dError("객체 수는 음수일 수 없습니다")
    primitives: List[Primitive] = [GroundPlane(ground_z)]
    sector = 2.0 * np.pi / max(num_objects, 1)
    offset = rng.uniform(0.0, 2.0 * np.pi)
    for i in range(num_objects):
        azimuth = offset + sector * (i + rng.uniform(0.2, 0.8))
        distance = rng.uniform(min_distance, max_distance)
        kind = "sphere" if rng.uniform() < 0.5 else "box"
        size = rng.uniform(0.6, 1.5)
        class_id = 2 + int(rng.integers(num_classes))
        primitives.append(place_object(azimuth, distance, kind, size, class_id, ground_z))
    return SimScene(primitives=tuple(primitives))


def random_scenes(count: int, seed: int, num_objects: int = 1) -> List[SimScene]:
    rng = np.random.default_rng(seed)
    return [random_scene(rng, num_objects) for _ in range(count)]


def scene_from_primitives(primitives: Sequence[Primitive], region: Optional[PerceptionRegion] = None) -> SimScene:
    return SimScene(primitives=tuple(primitives), region=region or PerceptionRegion.default())
