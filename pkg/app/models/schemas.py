from typing import Annotated, List, Literal, Tuple, Union
from pydantic import BaseModel, Field, TypeAdapter
import numpy as np

from config.settings import settings
from pe3d.geometry.camera import CameraParams, PerceptionRegion
from pe3d.simulation.primitives import Box, GroundPlane, Sphere


# 객체 클래스 id: 0 하늘, 1 지면, 2.. 객체
MAX_CLASS_ID = 1 + settings.num_object_classes


# 리그 / 장면 파일 모델
class CameraConfig(BaseModel):
    """리그 JSON 의 카메라 항목 (행 우선 3x3 행렬)"""
    name: str = "camera"
    width: int = Field(settings.image_width, gt=0)
    height: int = Field(settings.image_height, gt=0)
    K: List[float] = Field(..., min_length=9, max_length=9)
    R: List[float] = Field(..., min_length=9, max_length=9)
    T: List[float] = Field(..., min_length=3, max_length=3)

    def to_params(self) -> CameraParams:
        return CameraParams(
            intrinsics=np.array(self.K, dtype=np.float64).reshape(3, 3),
            rotation=np.array(self.R, dtype=np.float64).reshape(3, 3),
            translation=np.array(self.T, dtype=np.float64),
            width=self.width,
            height=self.height,
            name=self.name,
        )

    @classmethod
    def from_params(cls, cam: CameraParams) -> "CameraConfig":
        return cls(
            name=cam.name,
            width=cam.width,
            height=cam.height,
            K=cam.intrinsics.ravel().tolist(),
            R=cam.rotation.ravel().tolist(),
            T=cam.translation.tolist(),
        )


class RegionConfig(BaseModel):
    """인지 영역 (미터)"""
    x: Tuple[float, float] = settings.region_x
    y: Tuple[float, float] = settings.region_y
    z: Tuple[float, float] = settings.region_z

    def to_region(self) -> PerceptionRegion:
        return PerceptionRegion(*self.x, *self.y, *self.z)


class RigConfig(BaseModel):
    """리그 JSON 파일"""
    cameras: List[CameraConfig] = Field(..., min_length=1)
    region: RegionConfig = RegionConfig()


class PlaneConfig(BaseModel):
    type: Literal["plane"]
    z: float = settings.ground_z


class SphereConfig(BaseModel):
    type: Literal["sphere"]
    center: Tuple[float, float, float]
    radius: float = Field(..., gt=0)
    class_id: int = Field(2, ge=2, le=MAX_CLASS_ID)


class BoxConfig(BaseModel):
    type: Literal["box"]
    lo: Tuple[float, float, float]
    hi: Tuple[float, float, float]
    class_id: int = Field(2, ge=2, le=MAX_CLASS_ID)


PrimitiveConfig = Annotated[Union[PlaneConfig, SphereConfig, BoxConfig], Field(discriminator="type")]
SCENE_ADAPTER = TypeAdapter(List[PrimitiveConfig])


def to_primitive(config: PrimitiveConfig):
    """장면 JSON 항목 -> 시뮬레이터 프리미티브"""
    if isinstance(config, PlaneConfig):
        return GroundPlane(config.z)
    if isinstance(config, SphereConfig):
        return Sphere(center=config.center, radius=config.radius, class_id=config.class_id)
    return Box(lo=config.lo, hi=config.hi, class_id=config.class_id)


# ablation 격자 YAML
class AblationGrid(BaseModel):
    """ablation 격자 파일 (YAML)"""
    name: str = "custom"
    variants: List[str] = Field(..., min_length=1)
    seeds: int = Field(1, ge=1)
    base_seed: int = settings.default_seed
    steps: int = Field(settings.train_steps, ge=0)
    train_scenes: int = Field(settings.ablation_train_scenes, ge=1)
    eval_scenes: int = Field(settings.ablation_eval_scenes, ge=0)
    stride: int = Field(settings.ablation_stride, gt=0)
    optimizer: Literal["sgd", "adam"] = settings.ablation_optimizer
    learning_rate: float = Field(settings.ablation_learning_rate, gt=0)
    encoder_mode: Literal["shared", "separated"] = "shared"
    train_encoder: bool = False


# API 요청/응답 모델
class BackProjectRequest(BaseModel):
    """역투영 요청 모델"""
    camera: CameraConfig
    u: float
    v: float
    depth: float


class ProjectRequest(BaseModel):
    """투영 요청 모델"""
    camera: CameraConfig
    point: Tuple[float, float, float]


class PointResponse(BaseModel):
    point: List[float]


class PixelResponse(BaseModel):
    u: float
    v: float
    depth: float


class BinsRequest(BaseModel):
    """깊이 빈 생성 요청 모델"""
    method: Literal["ud", "lid", "sid"] = "lid"
    d_min: float = 1.0
    d_max: float = 61.0
    count: int = 64


class BinsResponse(BaseModel):
    spec: str
    centers: List[float]


class BracketRequest(BaseModel):
    bins: BinsRequest = BinsRequest()
    depth: float


class BracketResponse(BaseModel):
    lower: int
    upper: int
    weight: float


class DiscrepancyRequest(BaseModel):
    """카메라/LiDAR 광선 불일치 요청 모델 (각도는 도 단위)"""
    alpha_deg: float
    d_lc: float = settings.camera_forward_offset
    delta: float = settings.camera_lateral_offset
    d: float


class DiscrepancyResponse(BaseModel):
    discrepancy: float


class SweepRequest(BaseModel):
    alpha_deg: float
    d_lc: float = settings.camera_forward_offset
    delta: float = settings.camera_lateral_offset
    d_min: float = 1.0
    d_max: float = 61.0
    steps: int = Field(61, ge=1, le=100_000)


class SweepResponse(BaseModel):
    d: List[float]
    discrepancy: List[float]
