import json
import logging
from pathlib import Path
from typing import List, Optional, Tuple

import yaml
from pydantic import ValidationError

from app.models.schemas import SCENE_ADAPTER, AblationGrid, CameraConfig, RegionConfig, RigConfig, to_primitive
from pe3d.errors import Pe3dError
from pe3d.geometry.camera import CameraParams, PerceptionRegion
from pe3d.simulation.scene import SimScene, default_rig, scene_from_primitives

logger = logging.getLogger(__name__)


class ConfigFileError(Pe3dError):
    """설정 파일 오류. field 는 문제가 된 필드 경로 (예: cameras[1].K)."""

    def __init__(self, path, field: str, message: str):
        self.path = str(path)
        self.field = field
        super().__init__(f"{path}: {field}: {message}")


def _field_path(loc) -> str:
    path = ""
    for part in loc:
        path += f"[{part}]" if isinstance(part, int) else (f".{part}" if path else str(part))
    return path or "<root>"


def _from_validation(path, error: ValidationError) -> ConfigFileError:
    first = error.errors()[0]
    return ConfigFileError(path, _field_path(first["loc"]), first["msg"])


class RigService:
    """리그 / 장면 / ablation 격자 파일 로딩"""

    def rig_from_config(self, config: RigConfig, source="<rig>") -> Tuple[List[CameraParams], PerceptionRegion]:
        cameras = []
        for i, camera in enumerate(config.cameras):
            try:
                cameras.append(camera.to_params())
            except Pe3dError as e:
                raise ConfigFileError(source, f"cameras[{i}]", str(e)) from e
        try:
            region = config.region.to_region()
        except Pe3dError as e:
            raise ConfigFileError(source, "region", str(e)) from e
        return cameras, region

    def load_rig(self, path: Optional[str]) -> Tuple[List[CameraParams], PerceptionRegion]:
        """경로가 없으면 기본 6 카메라 리그"""
        if path is None:
            return default_rig(), PerceptionRegion.default()
        try:
            config = RigConfig.model_validate_json(Path(path).read_text(encoding="utf-8"))
        except ValidationError as e:
            raise _from_validation(path, e) from e
        except OSError as e:
            raise ConfigFileError(path, "<file>", str(e)) from e
        cameras, region = self.rig_from_config(config, path)
        logger.info(f"리그 로드: {path} (카메라 {len(cameras)}대)")
        return cameras, region

    def rig_to_json(self, cameras: List[CameraParams], region: PerceptionRegion) -> str:
        config = RigConfig(
            cameras=[CameraConfig.from_params(cam) for cam in cameras],
            region=RegionConfig(
                x=(region.x_min, region.x_max), y=(region.y_min, region.y_max), z=(region.z_min, region.z_max)
            ),
        )
        return json.dumps(config.model_dump(), indent=2, sort_keys=True)

    def load_scene(self, path: str, region: Optional[PerceptionRegion] = None) -> SimScene:
        try:
            configs = SCENE_ADAPTER.validate_json(Path(path).read_text(encoding="utf-8"))
        except ValidationError as e:
            raise _from_validation(path, e) from e
        except OSError as e:
            raise ConfigFileError(path, "<file>", str(e)) from e
        primitives = []
        for i, config in enumerate(configs):
            try:
                primitives.append(to_primitive(config))
            except Pe3dError as e:
                raise ConfigFileError(path, f"[{i}]", str(e)) from e
        try:
            return scene_from_primitives(primitives, region)
        except Pe3dError as e:
            raise ConfigFileError(path, "<scene>", str(e)) from e

    def load_grid(self, path: str) -> AblationGrid:
        try:
            data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
            return AblationGrid.model_validate(data)
        except ValidationError as e:
            raise _from_validation(path, e) from e
        except (OSError, yaml.YAMLError) as e:
            raise ConfigFileError(path, "<file>", str(e)) from e
